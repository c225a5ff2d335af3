"""Latent-class generative models over finite point sets.

A model is a finite set of ambient points, a class prior, and one
finite-support distribution per class. Similar pairs are two iid draws
from one class distribution; negatives are drawn from the marginal.
Everything downstream (losses, bounds) is an exact expectation over
these finite supports.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from itertools import product
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EnumerationCapError,
    UnknownClassError,
    ValidationError,
)
from .rng import categorical, stream

PROB_TOL = 1e-9
DEFAULT_ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class FiniteDistribution:
    """Probability distribution with finite support, stored as (id, prob) pairs."""

    entries: tuple[tuple[str, float], ...]

    def __post_init__(self):
        object.__setattr__(
            self, "entries", tuple((str(i), float(p)) for i, p in self.entries)
        )
        ids = [i for i, _ in self.entries]
        if not ids:
            raise ValidationError("distribution needs at least one entry")
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate item-ids in distribution")
        probs = [p for _, p in self.entries]
        if min(probs) < 0.0:
            raise ValidationError("negative probability")
        total = math.fsum(probs)
        if abs(total - 1.0) > PROB_TOL:
            raise ValidationError(f"probabilities sum to {total!r}, not 1")

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> "FiniteDistribution":
        return cls(tuple(sorted(mapping.items())))

    @classmethod
    def uniform(cls, ids: Iterable[str]) -> "FiniteDistribution":
        ids = list(ids)
        return cls(tuple((i, 1.0 / len(ids)) for i in ids))

    @cached_property
    def support(self) -> tuple[str, ...]:
        return tuple(i for i, _ in self.entries)

    @cached_property
    def probs(self) -> dict[str, float]:
        return dict(self.entries)

    @cached_property
    def prob_array(self) -> np.ndarray:
        a = np.array([p for _, p in self.entries], dtype=np.float64)
        a.flags.writeable = False
        return a

    @cached_property
    def _cum(self) -> np.ndarray:
        c = np.cumsum(self.prob_array)
        c[-1] = 1.0
        c.flags.writeable = False
        return c

    def prob(self, item: str) -> float:
        return self.probs.get(item, 0.0)

    def sample(self, gen: np.random.Generator) -> str:
        return self.support[categorical(gen, self._cum)]

    def as_dict(self) -> dict[str, float]:
        return dict(self.entries)


@dataclass(frozen=True)
class LatentClassModel:
    """Finite latent-class model: points, per-class distributions, class prior."""

    ambient_dim: int
    points: Mapping[str, np.ndarray]
    classes: Mapping[str, FiniteDistribution]
    rho: FiniteDistribution

    def __post_init__(self):
        if self.ambient_dim < 1:
            raise ValidationError("ambient_dim must be positive")
        pts = {}
        for pid, vec in self.points.items():
            v = np.asarray(vec, dtype=np.float64)
            if v.shape != (self.ambient_dim,):
                raise ValidationError(
                    f"point {pid!r} has shape {v.shape}, expected ({self.ambient_dim},)"
                )
            v = v.copy()
            v.flags.writeable = False
            pts[str(pid)] = v
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "classes", dict(self.classes))
        for cid, dist in self.classes.items():
            if not dist.support:
                raise ValidationError(f"class {cid!r} has empty support")
            for pid in dist.support:
                if pid not in pts:
                    raise ValidationError(
                        f"class {cid!r} references unknown point {pid!r}"
                    )
        if set(self.rho.support) != set(self.classes):
            raise ValidationError("rho support must equal the class-id set")

    @cached_property
    def class_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.classes))

    @cached_property
    def point_ids(self) -> tuple[str, ...]:
        return tuple(sorted(self.points))

    @cached_property
    def active_classes(self) -> tuple[str, ...]:
        """Class-ids with strictly positive prior probability, sorted."""
        return tuple(c for c in self.class_ids if self.rho.prob(c) > 0.0)

    def point(self, pid: str) -> np.ndarray:
        return self.points[pid]

    def class_dist(self, cid: str) -> FiniteDistribution:
        try:
            return self.classes[cid]
        except KeyError:
            raise UnknownClassError(cid) from None

    def max_support(self) -> int:
        return max(len(d.support) for d in self.classes.values())

    def digest(self) -> str:
        return digest_of(self.to_json_dict())

    def to_json_dict(self) -> dict:
        return {
            "ambient_dim": self.ambient_dim,
            "points": {pid: self.points[pid].tolist() for pid in self.point_ids},
            "classes": {
                cid: self.classes[cid].as_dict() for cid in self.class_ids
            },
            "rho": self.rho.as_dict(),
        }

    @classmethod
    def from_json_dict(cls, obj: Mapping) -> "LatentClassModel":
        try:
            return cls(
                ambient_dim=int(obj["ambient_dim"]),
                points={k: np.asarray(v, dtype=np.float64) for k, v in obj["points"].items()},
                classes={
                    k: FiniteDistribution.from_mapping(v)
                    for k, v in obj["classes"].items()
                },
                rho=FiniteDistribution.from_mapping(obj["rho"]),
            )
        except KeyError as exc:
            raise ValidationError(f"model JSON missing key {exc}") from None


def load_model(path) -> LatentClassModel:
    with open(path) as fh:
        return LatentClassModel.from_json_dict(json.load(fh))


def save_model(model: LatentClassModel, path) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_json_dict(), fh, indent=2, sort_keys=True)


def digest_of(obj) -> str:
    """Short stable hash of a JSON-serializable object."""
    blob = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class CollisionStats:
    """Closed-form class-collision probabilities for k negative samples."""

    tau: float
    tau_k: float
    tau_prime: float
    k: int

    def __post_init__(self):
        if not (self.tau_prime <= self.tau_k + PROB_TOL and self.tau_k <= 1.0 + PROB_TOL):
            raise ValidationError("collision stats out of order")


@dataclass(frozen=True)
class Task:
    """A supervised task: >= 2 distinct classes plus a label distribution."""

    class_ids: tuple[str, ...]
    label_dist: FiniteDistribution

    def __post_init__(self):
        object.__setattr__(self, "class_ids", tuple(str(c) for c in self.class_ids))
        if len(self.class_ids) < 2:
            raise ValidationError("a task needs at least two classes")
        if len(set(self.class_ids)) != len(self.class_ids):
            raise ValidationError("task classes must be distinct")
        if set(self.label_dist.support) != set(self.class_ids):
            raise ValidationError("label distribution support must equal task classes")

    @classmethod
    def uniform(cls, class_ids: Sequence[str]) -> "Task":
        ids = tuple(class_ids)
        return cls(ids, FiniteDistribution.uniform(ids))


@dataclass(frozen=True)
class SampleBatch:
    """M tuples (x, x+, k negatives), with hidden class labels for diagnostics."""

    k: int
    tuples: tuple[tuple[str, str, tuple[str, ...]], ...]
    hidden_labels: tuple[tuple[str, tuple[str, ...]], ...]

    def __post_init__(self):
        if any(len(negs) != self.k for _, _, negs in self.tuples):
            raise ValidationError("every tuple must carry exactly k negatives")

    def __len__(self) -> int:
        return len(self.tuples)


@dataclass(frozen=True)
class BlockBatch:
    """M tuples (x, b-positive block, b-negative block) with hidden labels."""

    b: int
    tuples: tuple[tuple[str, tuple[str, ...], tuple[str, ...]], ...]
    hidden_labels: tuple[tuple[str, str], ...]

    def __post_init__(self):
        for _, pos, neg in self.tuples:
            if len(pos) != self.b or len(neg) != self.b:
                raise ValidationError("blocks must have exactly b members")

    def __len__(self) -> int:
        return len(self.tuples)


def collision_stats(model: LatentClassModel, k: int) -> CollisionStats:
    """Exact collision probabilities tau, tau_k, tau' of the class prior."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    probs = [model.rho.prob(c) for c in model.class_ids]
    tau = math.fsum(p * p for p in probs)
    tau_k = 1.0 - math.fsum(p * (1.0 - p) ** k for p in probs)
    tau_prime = math.fsum(p ** (k + 1) for p in probs)
    return CollisionStats(tau=tau, tau_k=tau_k, tau_prime=tau_prime, k=k)


def nu_distribution(model: LatentClassModel) -> FiniteDistribution:
    """Distribution with weight proportional to rho(c)^2."""
    sq = {c: model.rho.prob(c) ** 2 for c in model.active_classes}
    z = math.fsum(sq.values())
    return FiniteDistribution.from_mapping({c: v / z for c, v in sq.items()})


def u_distribution(model: LatentClassModel, k: int) -> FiniteDistribution:
    """Distribution of the positive class conditioned on a collision occurring."""
    if k < 1:
        raise ValidationError("k must be >= 1")
    w = {
        c: model.rho.prob(c) * (1.0 - (1.0 - model.rho.prob(c)) ** k)
        for c in model.active_classes
    }
    z = math.fsum(w.values())
    if z <= 0.0:
        # k=1 with a deterministic prior still has positive mass; z == 0
        # can only happen if every active class has rho == 0, impossible.
        raise ValidationError("u-distribution has no mass")
    return FiniteDistribution.from_mapping({c: v / z for c, v in w.items()})


def sample_batch(model: LatentClassModel, k: int, M: int, seed: int) -> SampleBatch:
    """Draw M (x, x+, negatives) tuples from the generative process.

    Deterministic in (model, k, M, seed); tuple j uses its own Philox
    counter block, so any parallel split over j reproduces this output.
    """
    if k < 1 or M < 1:
        raise ValidationError("k and M must be >= 1")
    tuples = []
    labels = []
    for j in range(M):
        gen = stream(seed, j)
        c_pos = model.rho.sample(gen)
        d_pos = model.classes[c_pos]
        x = d_pos.sample(gen)
        x_plus = d_pos.sample(gen)
        neg_classes = []
        negs = []
        for _ in range(k):
            c_neg = model.rho.sample(gen)
            neg_classes.append(c_neg)
            negs.append(model.classes[c_neg].sample(gen))
        tuples.append((x, x_plus, tuple(negs)))
        labels.append((c_pos, tuple(neg_classes)))
    return SampleBatch(k=k, tuples=tuple(tuples), hidden_labels=tuple(labels))


def sample_block_batch(model: LatentClassModel, b: int, M: int, seed: int) -> BlockBatch:
    """Draw M block tuples: x plus b positives from c+, b negatives from c-."""
    if b < 1 or M < 1:
        raise ValidationError("b and M must be >= 1")
    tuples = []
    labels = []
    for j in range(M):
        gen = stream(seed, j)
        c_pos = model.rho.sample(gen)
        d_pos = model.classes[c_pos]
        x = d_pos.sample(gen)
        pos = tuple(d_pos.sample(gen) for _ in range(b))
        c_neg = model.rho.sample(gen)
        d_neg = model.classes[c_neg]
        neg = tuple(d_neg.sample(gen) for _ in range(b))
        tuples.append((x, pos, neg))
        labels.append((c_pos, c_neg))
    return BlockBatch(b=b, tuples=tuple(tuples), hidden_labels=tuple(labels))


@dataclass(frozen=True)
class TaskWeights:
    """One task emitted by the (k+1)-tuple enumeration with its weights.

    ``prob`` is the task probability conditioned on no class collision;
    ``prob_partial`` conditions only on at least one genuine negative
    (the D' variant). ``rho_plus_min`` / ``rho_plus_max_partial`` are the
    extreme positive-class probabilities under the two conditionings.
    """

    task: Task
    prob: float
    prob_partial: float
    rho_plus_min: float
    rho_plus_max_partial: float
    p_max: float
    p_min: float


def task_distribution_D(
    model: LatentClassModel,
    k: int,
    cap: int = DEFAULT_ENUMERATION_CAP,
    label_dists: Mapping[frozenset, FiniteDistribution] | None = None,
) -> list[TaskWeights]:
    """Exact task distribution induced by (k+1)-tuple sampling.

    Enumerates all ordered tuples (c+, c1-, ..., ck-) over the active
    classes, groups them by their distinct-class set, and records the
    masses under both conditionings (no collision / not all collisions)
    together with the positive-class weight statistics.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    active = model.active_classes
    if len(active) < 2:
        raise ValidationError("need at least two classes with positive prior")
    n_tuples = len(active) ** (k + 1)
    if n_tuples > cap:
        raise EnumerationCapError(required=n_tuples, cap=cap)

    rho = {c: model.rho.prob(c) for c in active}
    mass_d: dict[frozenset, float] = {}
    mass_dp: dict[frozenset, float] = {}
    pos_mass_d: dict[tuple[frozenset, str], float] = {}
    pos_mass_dp: dict[tuple[frozenset, str], float] = {}

    for tup in product(active, repeat=k + 1):
        c_pos, negs = tup[0], tup[1:]
        n_coll = sum(1 for c in negs if c == c_pos)
        if n_coll == k:
            continue  # all negatives collide: excluded under both conditionings
        w = rho[c_pos]
        for c in negs:
            w *= rho[c]
        q = frozenset(tup)
        mass_dp[q] = mass_dp.get(q, 0.0) + w
        pos_mass_dp[(q, c_pos)] = pos_mass_dp.get((q, c_pos), 0.0) + w
        if n_coll == 0:
            mass_d[q] = mass_d.get(q, 0.0) + w
            pos_mass_d[(q, c_pos)] = pos_mass_d.get((q, c_pos), 0.0) + w

    z_d = math.fsum(mass_d.values())
    z_dp = math.fsum(mass_dp.values())
    out = []
    for q in sorted(mass_dp, key=lambda s: tuple(sorted(s))):
        ids = tuple(sorted(q))
        if label_dists and q in label_dists:
            task = Task(ids, label_dists[q])
        else:
            task = Task.uniform(ids)
        label_probs = [task.label_dist.prob(c) for c in ids]
        m_d = mass_d.get(q, 0.0)
        rho_plus_min = (
            min(pos_mass_d.get((q, c), 0.0) for c in ids) / m_d if m_d > 0 else 0.0
        )
        rho_plus_max_p = max(pos_mass_dp.get((q, c), 0.0) for c in ids) / mass_dp[q]
        out.append(
            TaskWeights(
                task=task,
                prob=m_d / z_d if z_d > 0 else 0.0,
                prob_partial=mass_dp[q] / z_dp,
                rho_plus_min=rho_plus_min,
                rho_plus_max_partial=rho_plus_max_p,
                p_max=max(label_probs),
                p_min=min(label_probs),
            )
        )
    return out
