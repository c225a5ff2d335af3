"""Empirical risk minimization over function classes.

Finite classes are minimized exactly by evaluation. Table and linear
classes are trained by projected subgradient descent on the empirical
loss; the best iterate is returned since subgradient steps are not
monotone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DivergedError, ValidationError
from .model import BlockBatch, LatentClassModel, SampleBatch
from .losses import LossKind, block_loss_empirical, unsup_loss_exact, unsup_loss_empirical
from .representation import RepresentationFn, project_norm_ball, value_matrix
from .rng import stream

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class FunctionClass:
    """Search space for ERM: an explicit list, or a parametric family."""

    kind: str
    members: tuple[RepresentationFn, ...] = ()
    d: int = 0
    norm_bound: float = 1.0

    def __post_init__(self):
        if self.kind not in ("finite_list", "table_class", "linear_class"):
            raise ValidationError(f"unknown function-class kind {self.kind!r}")
        if self.kind == "finite_list":
            if not self.members:
                raise ValidationError("finite_list needs at least one member")
        else:
            if self.d < 1:
                raise ValidationError("parametric class needs positive d")
            if self.norm_bound <= 0:
                raise ValidationError("norm_bound must be positive")


@dataclass(frozen=True)
class TrainResult:
    f_hat: RepresentationFn
    empirical_loss: float
    trace: tuple[tuple[int, float], ...]
    selected_index: int | None = None


def erm_finite(
    fclass: FunctionClass,
    batch: SampleBatch,
    kind: LossKind,
    model: LatentClassModel,
) -> TrainResult:
    """Evaluate every member on the batch; lowest loss wins, lowest index on ties."""
    if fclass.kind != "finite_list":
        raise ValidationError("erm_finite requires a finite_list class")
    losses = [
        unsup_loss_empirical(f, batch, kind, model) for f in fclass.members
    ]
    best = min(range(len(losses)), key=lambda i: (losses[i], i))
    return TrainResult(
        f_hat=fclass.members[best],
        empirical_loss=losses[best],
        trace=tuple(enumerate(losses)),
        selected_index=best,
    )


def select_best_exact(
    fclass: FunctionClass,
    model: LatentClassModel,
    k: int,
    kind: LossKind,
) -> TrainResult:
    """Population-level argmin over a finite class: the infinite-sample ERM."""
    if fclass.kind != "finite_list":
        raise ValidationError("select_best_exact requires a finite_list class")
    losses = [unsup_loss_exact(f, model, k, kind) for f in fclass.members]
    best = min(range(len(losses)), key=lambda i: (losses[i], i))
    return TrainResult(
        f_hat=fclass.members[best],
        empirical_loss=losses[best],
        trace=tuple(enumerate(losses)),
        selected_index=best,
    )


def _batch_indices(model: LatentClassModel, batch: SampleBatch):
    pi = {pid: i for i, pid in enumerate(model.point_ids)}
    ix = np.array([pi[x] for x, _, _ in batch.tuples])
    ixp = np.array([pi[xp] for _, xp, _ in batch.tuples])
    ineg = np.array([[pi[n] for n in negs] for _, _, negs in batch.tuples])
    return ix, ixp, ineg


def _pair_loss_grad(V, ix, ixp, ineg, kind: LossKind):
    """Empirical loss over tuples and its subgradient with respect to the
    per-point value matrix V."""
    M = ix.shape[0]
    scores = np.einsum("ij,ij->i", V[ix], V[ixp])[:, None] - np.einsum(
        "ij,imj->im", V[ix], V[ineg]
    )
    grad = np.zeros_like(V)
    if kind.family == "hinge":
        j = np.argmin(scores, axis=1)
        m = scores[np.arange(M), j]
        vals = np.maximum(0.0, 1.0 + (-m) / kind.margin)
        act = vals > 0.0
        nstar = ineg[np.arange(M), j]
        coef = 1.0 / (kind.margin * M)
        np.add.at(grad, ix[act], coef * (V[nstar[act]] - V[ixp[act]]))
        np.add.at(grad, nstar[act], coef * V[ix[act]])
        np.add.at(grad, ixp[act], -coef * V[ix[act]])
    else:
        neg = -scores
        mx = np.maximum(neg.max(axis=1), 0.0)
        e = np.exp(neg - mx[:, None])
        denom = np.exp(-mx) + e.sum(axis=1)
        vals = (mx + np.log(denom)) / _LN2
        p = e / denom[:, None] / _LN2 / M  # dl/d(-score), folded with 1/M
        np.add.at(grad, ix, np.einsum("im,imj->ij", p, V[ineg]) - p.sum(axis=1)[:, None] * V[ixp])
        np.add.at(grad, ixp, -p.sum(axis=1)[:, None] * V[ix])
        k = ineg.shape[1]
        for i in range(k):
            np.add.at(grad, ineg[:, i], p[:, i][:, None] * V[ix])
    return float(np.mean(vals)), grad


def _block_indices(model: LatentClassModel, batch: BlockBatch):
    pi = {pid: i for i, pid in enumerate(model.point_ids)}
    ix = np.array([pi[x] for x, _, _ in batch.tuples])
    ipos = np.array([[pi[p] for p in pos] for _, pos, _ in batch.tuples])
    ineg = np.array([[pi[p] for p in neg] for _, _, neg in batch.tuples])
    return ix, ipos, ineg


def _block_loss_grad(V, ix, ipos, ineg, kind: LossKind):
    M, b = ipos.shape
    pm = V[ipos].mean(axis=1)
    nm = V[ineg].mean(axis=1)
    s = np.einsum("ij,ij->i", V[ix], pm - nm)
    grad = np.zeros_like(V)
    if kind.family == "hinge":
        vals = np.maximum(0.0, 1.0 + (-s) / kind.margin)
        act = vals > 0.0
        dls = np.where(act, -1.0 / kind.margin, 0.0) / M
    else:
        z = np.logaddexp(0.0, -s)
        vals = z / _LN2
        dls = -(np.exp(-s - z)) / _LN2 / M
    np.add.at(grad, ix, dls[:, None] * (pm - nm))
    for j in range(b):
        np.add.at(grad, ipos[:, j], (dls / b)[:, None] * V[ix])
        np.add.at(grad, ineg[:, j], -(dls / b)[:, None] * V[ix])
    return float(np.mean(vals)), grad


def _init_params(fclass: FunctionClass, model: LatentClassModel, seed: int):
    gen = stream(seed, 0)
    n_pts = len(model.point_ids)
    d, R = fclass.d, fclass.norm_bound
    if fclass.kind == "table_class":
        return gen.uniform(-R / math.sqrt(d), R / math.sqrt(d), size=(n_pts, d))
    amb = model.ambient_dim
    A = gen.normal(size=(max(d, amb), min(d, amb)))
    Q, _ = np.linalg.qr(A)
    W = Q[:d, :amb] if Q.shape == (max(d, amb), amb) else Q[:amb, :d].T
    if W.shape != (d, amb):
        W = np.zeros((d, amb))
        m = min(d, amb)
        W[:m, :m] = np.eye(m)
    diam = max(float(np.linalg.norm(v)) for v in model.points.values())
    return W * (R / diam if diam > 0 else 1.0)


def _to_fn(fclass: FunctionClass, model: LatentClassModel, params: np.ndarray) -> RepresentationFn:
    if fclass.kind == "table_class":
        return RepresentationFn(
            kind="table",
            d=fclass.d,
            norm_bound=fclass.norm_bound,
            table={pid: params[i] for i, pid in enumerate(model.point_ids)},
        )
    return RepresentationFn(
        kind="linear", d=fclass.d, norm_bound=fclass.norm_bound, matrix=params
    )


def _descent(fclass, model, kind, steps, step_size, seed, loss_grad, empirical):
    if fclass.kind == "finite_list":
        raise ValidationError("descent requires a parametric class")
    if steps < 1:
        raise ValidationError("steps must be >= 1")
    params = _init_params(fclass, model, seed)
    f = project_norm_ball(_to_fn(fclass, model, params), fclass.norm_bound, model)
    best_f, best = f, empirical(f)
    trace = [(0, best)]
    for t in range(1, steps + 1):
        V = value_matrix(f, model)
        loss, gradV = loss_grad(V)
        if not math.isfinite(loss):
            raise DivergedError(t)
        if fclass.kind == "table_class":
            newV = V - (step_size / math.sqrt(t)) * gradV
            params = newV
        else:
            P = np.stack([model.points[p] for p in model.point_ids])
            gradW = gradV.T @ P
            params = f.matrix - (step_size / math.sqrt(t)) * gradW
        f = project_norm_ball(
            _to_fn(fclass, model, params), fclass.norm_bound, model
        )
        val = empirical(f)
        if val < best:
            best, best_f = val, f
        trace.append((t, best))
    return TrainResult(f_hat=best_f, empirical_loss=best, trace=tuple(trace))


def erm_descent(
    fclass: FunctionClass,
    batch: SampleBatch,
    kind: LossKind,
    model: LatentClassModel,
    steps: int = 500,
    step_size: float = 0.1,
    seed: int = 0,
) -> TrainResult:
    """Projected subgradient descent on the empirical tuple loss."""
    ix, ixp, ineg = _batch_indices(model, batch)
    return _descent(
        fclass,
        model,
        kind,
        steps,
        step_size,
        seed,
        lambda V: _pair_loss_grad(V, ix, ixp, ineg, kind),
        lambda f: unsup_loss_empirical(f, batch, kind, model),
    )


def erm_block(
    fclass: FunctionClass,
    batch: BlockBatch,
    kind: LossKind,
    model: LatentClassModel,
    steps: int = 500,
    step_size: float = 0.1,
    seed: int = 0,
) -> TrainResult:
    """Projected subgradient descent on the empirical block loss."""
    ix, ipos, ineg = _block_indices(model, batch)
    return _descent(
        fclass,
        model,
        kind,
        steps,
        step_size,
        seed,
        lambda V: _block_loss_grad(V, ix, ipos, ineg, kind),
        lambda f: block_loss_empirical(f, batch, kind, model),
    )
