"""k-way hinge and logistic losses and the unsupervised loss functionals.

Population quantities are exact: expectations are enumerated over the
finite supports in deterministic order with compensated summation. The
hinge family additionally has a closed-form path over the order
statistics of the negative-score distribution, which stays exact when
the direct (k+1)-tuple enumeration would blow past the cap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from typing import Sequence

import numpy as np

from . import kernels
from .errors import DegenerateModelError, EnumerationCapError, ValidationError
from .model import (
    DEFAULT_ENUMERATION_CAP,
    BlockBatch,
    LatentClassModel,
    SampleBatch,
    collision_stats,
)
from .representation import RepresentationFn, value_matrix


@dataclass(frozen=True)
class LossKind:
    """Loss family plus margin. The margin applies to the hinge only."""

    family: str = "hinge"
    margin: float = 1.0

    def __post_init__(self):
        if self.family not in ("hinge", "logistic"):
            raise ValidationError(f"unknown loss family {self.family!r}")
        if self.margin <= 0:
            raise ValidationError("margin must be positive")
        if self.family == "logistic" and self.margin != 1.0:
            raise ValidationError("logistic loss has no margin parameter")

    @property
    def code(self) -> int:
        return kernels.HINGE if self.family == "hinge" else kernels.LOGISTIC

    def at_zero(self, t: int) -> float:
        """Loss of the all-zero score vector of length t."""
        if t < 1:
            raise ValidationError("need at least one coordinate")
        if self.family == "hinge":
            return 1.0
        return math.log2(1.0 + t)


HINGE = LossKind("hinge")
LOGISTIC = LossKind("logistic")


@dataclass(frozen=True)
class UnsupDecomposition:
    """Split of the k=1 loss by whether the negative class collides."""

    l_un: float
    l_eq: float
    l_neq: float
    tau: float


@dataclass(frozen=True)
class CollisionSplit:
    """k-negative loss split into genuine-negative and collision parts."""

    k: int
    l_neq_k: float
    collision_term: float
    baseline_term: float
    delta: float


def loss_value(kind: LossKind, v: Sequence[float]) -> float:
    """k-way loss of one score vector."""
    arr = np.atleast_2d(np.asarray(v, dtype=np.float64))
    if arr.shape[1] < 1:
        raise ValidationError("score vector must be nonempty")
    return float(kernels.loss_rows(arr, kind.code, kind.margin)[0])


class _Eval:
    """Per-(f, model) precomputation shared by the enumeration loops."""

    def __init__(self, f: RepresentationFn, model: LatentClassModel):
        self.model = model
        self.pid_index = {pid: i for i, pid in enumerate(model.point_ids)}
        self.V = value_matrix(f, model)
        self.G = self.V @ self.V.T
        self.cls_idx = {
            c: np.array([self.pid_index[p] for p in model.classes[c].support])
            for c in model.class_ids
        }
        self.cls_w = {c: model.classes[c].prob_array for c in model.class_ids}
        self.rho = {c: model.rho.prob(c) for c in model.class_ids}

    def marginal(self) -> tuple[np.ndarray, np.ndarray]:
        """Point indices and probabilities of the class-mixture marginal."""
        q = np.zeros(len(self.pid_index))
        for c in self.model.active_classes:
            np.add.at(q, self.cls_idx[c], self.rho[c] * self.cls_w[c])
        keep = q > 0
        return np.nonzero(keep)[0], q[keep]


def _tuple_grid(index_lists, weight_lists):
    """All ordered choices, one row each, with their probability products."""
    grids = np.meshgrid(*index_lists, indexing="ij")
    cols = np.stack([g.ravel() for g in grids], axis=1)
    w = np.ones(cols.shape[0])
    wg = np.meshgrid(*weight_lists, indexing="ij")
    for g in wg:
        w = w * g.ravel()
    return cols, w


def _generic_cost(model: LatentClassModel, k: int) -> int:
    n = len(model.active_classes)
    s = model.max_support()
    return n ** (k + 1) * s ** (k + 2)


def unsup_loss_exact(
    f: RepresentationFn,
    model: LatentClassModel,
    k: int,
    kind: LossKind = HINGE,
    cap: int = DEFAULT_ENUMERATION_CAP,
    with_variance: bool = False,
):
    """Exact population loss with k negative samples.

    Returns the mean, or (mean, variance) when ``with_variance`` is set.
    Falls back to the order-statistic route for the hinge family when
    the direct enumeration exceeds the cap; that route is equally exact.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    ev = _Eval(f, model)
    if _generic_cost(model, k) <= cap:
        return _unsup_generic(ev, k, kind, with_variance)
    if kind.family == "hinge":
        return _unsup_hinge_fast(ev, k, kind, with_variance)
    raise EnumerationCapError(required=_generic_cost(model, k), cap=cap)


def _unsup_generic(ev: _Eval, k: int, kind: LossKind, with_variance: bool):
    G = ev.G
    means, sqs = [], []
    for classes in product(ev.model.active_classes, repeat=k + 1):
        cw = math.prod(ev.rho[c] for c in classes)
        if cw == 0.0:
            continue
        c_pos, negs = classes[0], classes[1:]
        idx = [ev.cls_idx[c_pos], ev.cls_idx[c_pos]] + [ev.cls_idx[c] for c in negs]
        wts = [ev.cls_w[c_pos], ev.cls_w[c_pos]] + [ev.cls_w[c] for c in negs]
        cols, w = _tuple_grid(idx, wts)
        x, xp, neg = cols[:, 0], cols[:, 1], cols[:, 2:]
        scores = G[x, xp][:, None] - G[x[:, None], neg]
        losses = kernels.loss_rows(scores, kind.code, kind.margin)
        means.append(cw * kernels.weighted_sum(losses, w))
        if with_variance:
            sqs.append(cw * kernels.weighted_sum(losses * losses, w))
    mean = math.fsum(means)
    if not with_variance:
        return mean
    return mean, max(0.0, math.fsum(sqs) - mean * mean)


def _unsup_hinge_fast(ev: _Eval, k: int, kind: LossKind, with_variance: bool):
    """Hinge loss via the max order statistic of the negative scores.

    The hinge depends on the negatives only through m = max_i f(x)^T
    f(x_i-), and the negatives are iid from the class marginal, so for
    each anchor x the law of m follows from the k-th power of the
    marginal score CDF. Cost is linear in the total support size.
    """
    G = ev.G
    m_idx, m_w = ev.marginal()
    means, sqs = [], []
    for c in ev.model.active_classes:
        rho_c = ev.rho[c]
        sup, w_sup = ev.cls_idx[c], ev.cls_w[c]
        for xi_pos, wx in zip(sup, w_sup):
            scores = G[xi_pos, m_idx]
            order = np.argsort(scores, kind="stable")
            s_sorted = scores[order]
            cdf = np.cumsum(m_w[order])
            cdf[-1] = 1.0
            # collapse ties so the CDF is over distinct score values
            distinct = np.nonzero(np.diff(s_sorted, append=np.inf) > 0)[0]
            s_vals = s_sorted[distinct]
            F = cdf[distinct]
            p_max = F**k - np.concatenate(([0.0], F[:-1] ** k))
            for xj_pos, wxp in zip(sup, w_sup):
                a = G[xi_pos, xj_pos]
                lv = np.maximum(0.0, 1.0 + (s_vals - a) / kind.margin)
                cw = rho_c * wx * wxp
                means.append(cw * kernels.weighted_sum(lv, p_max))
                if with_variance:
                    sqs.append(cw * kernels.weighted_sum(lv * lv, p_max))
    mean = math.fsum(means)
    if not with_variance:
        return mean
    return mean, max(0.0, math.fsum(sqs) - mean * mean)


def unsup_loss_empirical(f: RepresentationFn, batch: SampleBatch, kind: LossKind, model: LatentClassModel) -> float:
    """Mean loss over the tuples of a sampled batch."""
    if len(batch) == 0:
        raise ValidationError("batch must be nonempty")
    ev = _Eval(f, model)
    G, pi = ev.G, ev.pid_index
    rows = np.empty((len(batch), batch.k))
    for r, (x, xp, negs) in enumerate(batch.tuples):
        ix, ixp = pi[x], pi[xp]
        rows[r] = G[ix, ixp] - G[ix, [pi[n] for n in negs]]
    losses = kernels.loss_rows(rows, kind.code, kind.margin)
    return float(np.mean(losses))


def block_loss_exact(
    f: RepresentationFn,
    model: LatentClassModel,
    b: int,
    kind: LossKind = HINGE,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Exact population loss with size-b positive and negative blocks."""
    if b < 1:
        raise ValidationError("b must be >= 1")
    n = len(model.active_classes)
    s = model.max_support()
    if n * n * s ** (2 * b + 1) > cap:
        raise EnumerationCapError(required=n * n * s ** (2 * b + 1), cap=cap)
    ev = _Eval(f, model)
    V, G = ev.V, ev.G
    parts = []
    for c_pos in model.active_classes:
        for c_neg in model.active_classes:
            cw = ev.rho[c_pos] * ev.rho[c_neg]
            if cw == 0.0:
                continue
            idx = (
                [ev.cls_idx[c_pos]]
                + [ev.cls_idx[c_pos]] * b
                + [ev.cls_idx[c_neg]] * b
            )
            wts = (
                [ev.cls_w[c_pos]]
                + [ev.cls_w[c_pos]] * b
                + [ev.cls_w[c_neg]] * b
            )
            cols, w = _tuple_grid(idx, wts)
            x = cols[:, 0]
            pos_mean = V[cols[:, 1 : b + 1]].mean(axis=1)
            neg_mean = V[cols[:, b + 1 :]].mean(axis=1)
            scores = np.einsum("ij,ij->i", V[x], pos_mean - neg_mean)
            losses = kernels.loss_rows(scores[:, None], kind.code, kind.margin)
            parts.append(cw * kernels.weighted_sum(losses, w))
    return math.fsum(parts)


def block_loss_empirical(f: RepresentationFn, batch: BlockBatch, kind: LossKind, model: LatentClassModel) -> float:
    if len(batch) == 0:
        raise ValidationError("batch must be nonempty")
    ev = _Eval(f, model)
    V, pi = ev.V, ev.pid_index
    scores = np.empty((len(batch), 1))
    for r, (x, pos, neg) in enumerate(batch.tuples):
        pm = V[[pi[p] for p in pos]].mean(axis=0)
        nm = V[[pi[p] for p in neg]].mean(axis=0)
        scores[r, 0] = V[pi[x]] @ (pm - nm)
    return float(np.mean(kernels.loss_rows(scores, kind.code, kind.margin)))


def _class_pair_loss(ev: _Eval, c_pos: str, c_neg: str, kind: LossKind) -> float:
    """E[loss] with x, x+ from c_pos and one negative from c_neg."""
    G = ev.G
    cols, w = _tuple_grid(
        [ev.cls_idx[c_pos], ev.cls_idx[c_pos], ev.cls_idx[c_neg]],
        [ev.cls_w[c_pos], ev.cls_w[c_pos], ev.cls_w[c_neg]],
    )
    scores = (G[cols[:, 0], cols[:, 1]] - G[cols[:, 0], cols[:, 2]])[:, None]
    return kernels.weighted_sum(kernels.loss_rows(scores, kind.code, kind.margin), w)


def decompose_unsup(
    f: RepresentationFn, model: LatentClassModel, kind: LossKind = HINGE
) -> UnsupDecomposition:
    """Split the k=1 loss by whether the negative's class matches."""
    if len(model.active_classes) < 2:
        raise DegenerateModelError("decomposition needs >= 2 classes with mass")
    ev = _Eval(f, model)
    tau = collision_stats(model, 1).tau
    eq_parts, neq_parts = [], []
    for c_pos in model.active_classes:
        for c_neg in model.active_classes:
            cw = ev.rho[c_pos] * ev.rho[c_neg]
            part = cw * _class_pair_loss(ev, c_pos, c_neg, kind)
            (eq_parts if c_pos == c_neg else neq_parts).append(part)
    l_eq = math.fsum(eq_parts) / tau
    l_neq = math.fsum(neq_parts) / (1.0 - tau)
    return UnsupDecomposition(
        l_un=tau * l_eq + (1.0 - tau) * l_neq, l_eq=l_eq, l_neq=l_neq, tau=tau
    )


def collision_split(
    f: RepresentationFn,
    model: LatentClassModel,
    k: int,
    kind: LossKind = HINGE,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> CollisionSplit:
    """Split the k-negative loss into genuine-negative and collision parts.

    ``l_neq_k`` conditions on at least one genuine negative and scores
    only the non-colliding indices. The collision and baseline terms
    condition on at least one collision; the number of collisions for a
    class with prior p is Binomial(k, p).
    """
    stats = collision_stats(model, k)
    if stats.tau_k >= 1.0 - 1e-15:
        raise DegenerateModelError("every negative collides almost surely")
    ev = _Eval(f, model)
    G = ev.G

    # genuine-negative part: enumerate class tuples, prune collisions
    cost = _generic_cost(model, k)
    if cost > cap:
        raise EnumerationCapError(required=cost, cap=cap)
    neq_parts = []
    for classes in product(model.active_classes, repeat=k + 1):
        c_pos, negs = classes[0], classes[1:]
        keep = [i for i, c in enumerate(negs) if c != c_pos]
        if not keep:
            continue
        cw = math.prod(ev.rho[c] for c in classes)
        if cw == 0.0:
            continue
        kept = [negs[i] for i in keep]
        idx = [ev.cls_idx[c_pos], ev.cls_idx[c_pos]] + [ev.cls_idx[c] for c in kept]
        wts = [ev.cls_w[c_pos], ev.cls_w[c_pos]] + [ev.cls_w[c] for c in kept]
        cols, w = _tuple_grid(idx, wts)
        x, xp, neg = cols[:, 0], cols[:, 1], cols[:, 2:]
        scores = G[x, xp][:, None] - G[x[:, None], neg]
        losses = kernels.loss_rows(scores, kind.code, kind.margin)
        neq_parts.append(cw * kernels.weighted_sum(losses, w))
    l_neq_k = math.fsum(neq_parts) / (1.0 - stats.tau_prime)

    # collision part: per class, per collision count m, score m within-class draws
    coll_parts, base_parts = [], []
    for c in model.active_classes:
        p = ev.rho[c]
        for m in range(1, k + 1):
            w_cm = p * math.comb(k, m) * p**m * (1.0 - p) ** (k - m)
            if w_cm == 0.0:
                continue
            idx = [ev.cls_idx[c]] * (m + 2)
            wts = [ev.cls_w[c]] * (m + 2)
            cols, w = _tuple_grid(idx, wts)
            x, xp, neg = cols[:, 0], cols[:, 1], cols[:, 2:]
            scores = G[x, xp][:, None] - G[x[:, None], neg]
            losses = kernels.loss_rows(scores, kind.code, kind.margin)
            coll_parts.append(w_cm * kernels.weighted_sum(losses, w))
            base_parts.append(w_cm * kind.at_zero(m))
    collision_term = math.fsum(coll_parts) / stats.tau_k
    baseline_term = math.fsum(base_parts) / stats.tau_k
    return CollisionSplit(
        k=k,
        l_neq_k=l_neq_k,
        collision_term=collision_term,
        baseline_term=baseline_term,
        delta=collision_term - baseline_term,
    )
