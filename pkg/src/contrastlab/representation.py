"""Representation functions (table or linear) and per-class moments."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

import numpy as np

from .errors import UnknownPointError, ValidationError
from .model import LatentClassModel

NORM_TOL = 1e-9
_JACOBI_MAX_D = 64


def spectral_norm_psd(sigma: np.ndarray) -> float:
    """Largest eigenvalue of a symmetric PSD matrix.

    Cyclic Jacobi sweeps for small matrices; power iteration with a
    small shift above the size cutoff.
    """
    sigma = np.asarray(sigma, dtype=np.float64)
    d = sigma.shape[0]
    if d == 1:
        return float(sigma[0, 0])
    if d <= _JACOBI_MAX_D:
        return float(np.max(_jacobi_eigenvalues(sigma)))
    return _power_iteration(sigma)


def _jacobi_eigenvalues(sigma: np.ndarray) -> np.ndarray:
    a = sigma.copy()
    d = a.shape[0]
    for _ in range(100):
        off = 0.0
        for p in range(d - 1):
            for q in range(p + 1, d):
                off = max(off, abs(a[p, q]))
                if abs(a[p, q]) < 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1.0)
                )
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                rot = np.eye(d)
                rot[p, p] = c
                rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
        if off < 1e-13:
            break
    return np.diag(a)


def _power_iteration(sigma: np.ndarray, tol: float = 1e-10, max_iter: int = 10**4) -> float:
    d = sigma.shape[0]
    v = np.full(d, 1.0 / math.sqrt(d))
    lam = 0.0
    for _ in range(max_iter):
        w = sigma @ v
        nrm = float(np.linalg.norm(w))
        if nrm == 0.0:
            return 0.0
        v = w / nrm
        new = float(v @ sigma @ v)
        if abs(new - lam) < tol:
            return new
        lam = new
    return lam


@dataclass(frozen=True)
class RepresentationFn:
    """Map from model points to R^d: a lookup table or a linear map."""

    kind: str
    d: int
    norm_bound: float
    table: Mapping[str, np.ndarray] | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in ("table", "linear"):
            raise ValidationError(f"unknown representation kind {self.kind!r}")
        if self.d < 1:
            raise ValidationError("output dimension must be positive")
        if self.norm_bound <= 0:
            raise ValidationError("norm_bound must be positive")
        if self.kind == "table":
            if self.table is None:
                raise ValidationError("table kind needs a table")
            tbl = {}
            for pid, vec in self.table.items():
                v = np.asarray(vec, dtype=np.float64)
                if v.shape != (self.d,):
                    raise ValidationError(
                        f"table entry {pid!r} has shape {v.shape}, expected ({self.d},)"
                    )
                v = v.copy()
                v.flags.writeable = False
                tbl[str(pid)] = v
            object.__setattr__(self, "table", tbl)
        else:
            if self.matrix is None:
                raise ValidationError("linear kind needs a matrix")
            m = np.asarray(self.matrix, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] != self.d:
                raise ValidationError("matrix must have shape (d, ambient_dim)")
            m = m.copy()
            m.flags.writeable = False
            object.__setattr__(self, "matrix", m)

    def to_json_dict(self) -> dict:
        out = {"kind": self.kind, "d": self.d, "norm_bound": self.norm_bound}
        if self.kind == "table":
            out["table"] = {k: v.tolist() for k, v in sorted(self.table.items())}
        else:
            out["matrix"] = self.matrix.tolist()
        return out

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "RepresentationFn":
        try:
            return cls(
                kind=obj["kind"],
                d=int(obj["d"]),
                norm_bound=float(obj["norm_bound"]),
                table={k: np.asarray(v) for k, v in obj["table"].items()}
                if "table" in obj
                else None,
                matrix=np.asarray(obj["matrix"]) if "matrix" in obj else None,
            )
        except KeyError as exc:
            raise ValidationError(f"representation JSON missing key {exc}") from None


@dataclass(frozen=True)
class ClassMoments:
    """Exact mean / covariance of f(x), x drawn from one class distribution."""

    class_id: str
    mean: np.ndarray
    covariance: np.ndarray
    mean_norm: float
    spectral_norm: float


def apply(f: RepresentationFn, x: str, model: LatentClassModel) -> np.ndarray:
    """Evaluate f on one point. No norm clipping here."""
    if x not in model.points:
        raise UnknownPointError(x)
    if f.kind == "table":
        try:
            return f.table[x]
        except KeyError:
            raise UnknownPointError(x) from None
    if model.ambient_dim != f.matrix.shape[1]:
        raise ValidationError("matrix ambient dimension does not match model")
    return f.matrix @ model.points[x]


def value_matrix(f: RepresentationFn, model: LatentClassModel) -> np.ndarray:
    """f evaluated on all model points, rows in sorted point-id order."""
    return np.stack([apply(f, pid, model) for pid in model.point_ids])


def class_moments(f: RepresentationFn, model: LatentClassModel, c: str) -> ClassMoments:
    dist = model.class_dist(c)
    vecs = np.stack([apply(f, pid, model) for pid in dist.support])
    w = dist.prob_array
    mean = w @ vecs
    centered = vecs - mean
    cov = (centered * w[:, None]).T @ centered
    cov = 0.5 * (cov + cov.T)
    mean_norm = float(w @ np.linalg.norm(vecs, axis=1))
    return ClassMoments(
        class_id=c,
        mean=mean,
        covariance=cov,
        mean_norm=mean_norm,
        spectral_norm=spectral_norm_psd(cov),
    )


def max_norm(f: RepresentationFn, model: LatentClassModel) -> float:
    return float(np.max(np.linalg.norm(value_matrix(f, model), axis=1)))


def check_norm_bound(f: RepresentationFn, model: LatentClassModel) -> None:
    worst = max_norm(f, model)
    if worst > f.norm_bound + NORM_TOL:
        raise ValidationError(
            f"representation exceeds norm bound: {worst} > {f.norm_bound}"
        )


def project_norm_ball(
    f: RepresentationFn, R: float, model: LatentClassModel | None = None
) -> RepresentationFn:
    """Radially rescale f so every output lands in the radius-R ball.

    Table entries are rescaled individually. A linear map is scaled as a
    whole by the worst output norm over the supplied model's points.
    """
    if R <= 0:
        raise ValidationError("R must be positive")
    if f.kind == "table":
        tbl = {}
        for pid, v in f.table.items():
            n = float(np.linalg.norm(v))
            tbl[pid] = v * (R / n) if n > R else v
        return RepresentationFn(kind="table", d=f.d, norm_bound=R, table=tbl)
    if model is None:
        raise ValidationError("projecting a linear map requires a model")
    worst = max_norm(f, model)
    scale = min(1.0, R / worst) if worst > 0 else 1.0
    return RepresentationFn(
        kind="linear", d=f.d, norm_bound=R, matrix=f.matrix * scale
    )


def zero_representation(model: LatentClassModel, d: int, norm_bound: float = 1.0) -> RepresentationFn:
    return RepresentationFn(
        kind="table",
        d=d,
        norm_bound=norm_bound,
        table={pid: np.zeros(d) for pid in model.point_ids},
    )


def identity_representation(model: LatentClassModel, norm_bound: float | None = None) -> RepresentationFn:
    if norm_bound is None:
        norm_bound = max(
            1.0, max(float(np.linalg.norm(v)) for v in model.points.values())
        )
    return RepresentationFn(
        kind="linear",
        d=model.ambient_dim,
        norm_bound=norm_bound,
        matrix=np.eye(model.ambient_dim),
    )


def load_representation(path) -> RepresentationFn:
    with open(path) as fh:
        return RepresentationFn.from_json_dict(json.load(fh))


def save_representation(f: RepresentationFn, path) -> None:
    with open(path, "w") as fh:
        json.dump(f.to_json_dict(), fh, indent=2, sort_keys=True)
