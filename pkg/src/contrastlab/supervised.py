"""Supervised-side evaluation: mean classifier, best linear classifier,
per-task losses, and averaged / weighted-averaged task losses."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product

import numpy as np

from . import kernels
from .errors import ValidationError
from .model import (
    DEFAULT_ENUMERATION_CAP,
    LatentClassModel,
    Task,
    task_distribution_D,
)
from .losses import LossKind
from .representation import RepresentationFn, apply, class_moments

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class MeanClassifier:
    """Linear classifier whose row for class c is the exact class mean."""

    task: Task
    rows: np.ndarray


@dataclass(frozen=True)
class SupEvalResult:
    task: Task
    loss_mean: float
    loss_best: float
    optimizer_iterations: int


def mean_classifier(f: RepresentationFn, model: LatentClassModel, task: Task) -> MeanClassifier:
    rows = np.stack(
        [class_moments(f, model, c).mean for c in task.class_ids]
    )
    return MeanClassifier(task=task, rows=rows)


def _task_data(f, model, task):
    """Flatten the task into (features X, label index y, weight w) triples."""
    X, y, w = [], [], []
    for t, c in enumerate(task.class_ids):
        pc = task.label_dist.prob(c)
        dist = model.class_dist(c)
        for pid, px in dist.entries:
            X.append(apply(f, pid, model))
            y.append(t)
            w.append(pc * px)
    return np.stack(X), np.array(y), np.array(w)


def _objective(W, X, y, w, kind: LossKind):
    """Exact population loss of classifier W on the task, plus a subgradient."""
    n, T = X.shape[0], W.shape[0]
    scores = X @ W.T
    own = scores[np.arange(n), y]
    z = scores - own[:, None]
    rows = np.arange(n)
    grad = np.zeros_like(W)
    if kind.family == "hinge":
        z[rows, y] = -np.inf
        j = np.argmax(z, axis=1)
        m = z[rows, j]
        vals = np.maximum(0.0, 1.0 + m / kind.margin)
        active = vals > 0.0
        coef = w[active] / kind.margin
        np.add.at(grad, j[active], coef[:, None] * X[active])
        np.add.at(grad, y[active], -coef[:, None] * X[active])
    else:
        z[rows, y] = -np.inf
        e = np.exp(z - np.maximum(z.max(axis=1), 0.0)[:, None])
        base = np.exp(-np.maximum(z.max(axis=1), 0.0))
        denom = base + e.sum(axis=1)
        vals = (np.log(denom) - np.log(base)) / _LN2
        p = e / denom[:, None] / _LN2
        coef = w[:, None] * p
        for t in range(T):
            grad[t] += coef[:, t] @ X
        np.add.at(grad, y, -(coef.sum(axis=1))[:, None] * X)
    loss = kernels.weighted_sum(vals, w)
    return loss, grad


def sup_loss_mean(f: RepresentationFn, model: LatentClassModel, task: Task, kind: LossKind = LossKind()) -> float:
    W = mean_classifier(f, model, task).rows
    X, y, w = _task_data(f, model, task)
    return _objective(W, X, y, w, kind)[0]


def sup_loss_best(
    f: RepresentationFn,
    model: LatentClassModel,
    task: Task,
    kind: LossKind = LossKind(),
    budget: int = 2000,
) -> SupEvalResult:
    """Descend the exact population objective from the mean classifier.

    The returned value is an achieved upper bound on the infimum, never
    a claim of optimality. Best iterate is tracked, so the result never
    exceeds the warm-start (mean-classifier) loss.
    """
    if budget < 1:
        raise ValidationError("budget must be >= 1")
    X, y, w = _task_data(f, model, task)
    W = mean_classifier(f, model, task).rows.copy()
    loss_mean, _ = _objective(W, X, y, w, kind)
    best = loss_mean
    iterations = 0
    for it in range(budget):
        loss, grad = _objective(W, X, y, w, kind)
        best = min(best, loss)
        gnorm2 = float(np.sum(grad * grad))
        if math.sqrt(gnorm2) < 1e-10:
            iterations = it
            break
        step = 1.0
        while step > 1e-16:
            trial, _ = _objective(W - step * grad, X, y, w, kind)
            if trial <= loss - 1e-4 * step * gnorm2:
                break
            step *= 0.5
        W = W - step * grad
        iterations = it + 1
    final, _ = _objective(W, X, y, w, kind)
    best = min(best, final)
    return SupEvalResult(
        task=task, loss_mean=loss_mean, loss_best=best, optimizer_iterations=iterations
    )


def avg_sup_loss(
    f: RepresentationFn,
    model: LatentClassModel,
    ways: int,
    kind: LossKind = LossKind(),
    use_mean: bool = True,
    budget: int = 2000,
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Average task loss over `ways` classes drawn from the prior.

    Ordered draws conditioned on all-distinct, renormalized over that
    event; tasks are grouped by their class set (the loss only depends
    on the set). Labels within a task are uniform.
    """
    active = model.active_classes
    if len(active) < ways:
        raise ValidationError("fewer classes with positive prior than ways")
    if ways < 2:
        raise ValidationError("ways must be >= 2")
    if len(active) ** ways > cap:
        raise ValidationError("task enumeration exceeds cap")
    rho = {c: model.rho.prob(c) for c in active}
    mass: dict[frozenset, float] = {}
    for tup in product(active, repeat=ways):
        if len(set(tup)) != ways:
            continue
        q = frozenset(tup)
        mass[q] = mass.get(q, 0.0) + math.prod(rho[c] for c in tup)
    z = math.fsum(mass.values())
    parts = []
    for q in sorted(mass, key=lambda s: tuple(sorted(s))):
        task = Task.uniform(tuple(sorted(q)))
        if use_mean:
            val = sup_loss_mean(f, model, task, kind)
        else:
            val = sup_loss_best(f, model, task, kind, budget).loss_best
        parts.append(mass[q] / z * val)
    return math.fsum(parts)


def weighted_avg_sup_loss(
    f: RepresentationFn,
    model: LatentClassModel,
    k: int,
    kind: LossKind = LossKind(),
    variant: str = "theoremB1",
    cap: int = DEFAULT_ENUMERATION_CAP,
) -> float:
    """Weighted average of mean-classifier task losses over the task
    distribution induced by (k+1)-tuple sampling.

    ``theoremB1`` weights each task by the minimum positive-class
    probability over the maximum label probability, conditioning on no
    collision. ``lemmaB2`` weights by the maximum positive-class
    probability over the minimum label probability, conditioning only
    on at least one genuine negative; pass the margin through ``kind``.
    """
    if variant not in ("theoremB1", "lemmaB2"):
        raise ValidationError(f"unknown variant {variant!r}")
    parts = []
    for tw in task_distribution_D(model, k, cap=cap):
        if variant == "theoremB1":
            outer = tw.prob * tw.rho_plus_min / tw.p_max
        else:
            outer = tw.prob_partial * tw.rho_plus_max_partial / tw.p_min
        if outer == 0.0:
            continue
        parts.append(outer * sup_loss_mean(f, model, tw.task, kind))
    return math.fsum(parts)
