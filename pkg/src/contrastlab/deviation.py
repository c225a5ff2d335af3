"""Intraclass deviation s(f), directional sub-Gaussian parameter, and
the margin constants built from them."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import LatentClassModel, nu_distribution
from .representation import RepresentationFn, apply, class_moments
from .rng import stream


@dataclass(frozen=True)
class DeviationSummary:
    s_value: float
    per_class: tuple[tuple[str, float, float, float], ...]
    sigma_bound: float
    max_norm: float


def deviation(f: RepresentationFn, model: LatentClassModel, directions: int = 64) -> DeviationSummary:
    """Exact intraclass deviation: s = E_nu[sqrt(||Sigma||_2) * E||f(x)||]."""
    nu = nu_distribution(model)
    rows = []
    parts = []
    for c in nu.support:
        m = class_moments(f, model, c)
        root = math.sqrt(max(0.0, m.spectral_norm))
        rows.append((c, root, m.mean_norm, nu.prob(c)))
        parts.append(nu.prob(c) * root * m.mean_norm)
    r_f = max(
        float(np.linalg.norm(apply(f, pid, model))) for pid in model.point_ids
    )
    return DeviationSummary(
        s_value=math.fsum(parts),
        per_class=tuple(rows),
        sigma_bound=sigma_bound(f, model, directions),
        max_norm=r_f,
    )


def sigma_bound(f: RepresentationFn, model: LatentClassModel, directions: int = 64) -> float:
    """Upper bound on the directional sub-Gaussian parameter of f(x) within
    a class: half the range of u.f(x) over the class support, maximized
    over probed unit directions u and over classes.

    Probed directions: covariance eigenvectors, all pairwise support
    differences (these attain the true directional sup), and
    ``directions`` random units. Half the range is a valid parameter by
    Hoeffding's lemma for bounded variables.
    """
    if directions < 1:
        raise ValidationError("directions must be >= 1")
    gen = stream(0xD1FF, 0)
    worst = 0.0
    for c in model.active_classes:
        vecs = np.stack([apply(f, pid, model) for pid in model.class_dist(c).support])
        if vecs.shape[0] == 1:
            continue
        d = vecs.shape[1]
        probes = []
        cov = class_moments(f, model, c).covariance
        _, eigvecs = np.linalg.eigh(cov)
        probes.append(eigvecs.T)
        diffs = vecs[:, None, :] - vecs[None, :, :]
        diffs = diffs.reshape(-1, d)
        norms = np.linalg.norm(diffs, axis=1)
        keep = norms > 1e-300
        if keep.any():
            probes.append(diffs[keep] / norms[keep][:, None])
        rnd = gen.normal(size=(directions, d))
        rnd /= np.linalg.norm(rnd, axis=1, keepdims=True)
        probes.append(rnd)
        U = np.concatenate(probes, axis=0)
        proj = vecs @ U.T
        half_range = 0.5 * (proj.max(axis=0) - proj.min(axis=0)).max()
        worst = max(worst, float(half_range))
    return worst


def gamma_of(f: RepresentationFn, model: LatentClassModel, epsilon: float, directions: int = 64) -> float:
    """Margin gamma = 1 + 2*R*sigma*sqrt(2 log R + log(3/eps)) for R >= 1,
    with the log R term dropped when R < 1. Natural logarithms; the
    bracket is clamped at zero so gamma >= 1 always."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    sigma = sigma_bound(f, model, directions)
    if sigma == 0.0:
        return 1.0
    r = max(
        float(np.linalg.norm(apply(f, pid, model))) for pid in model.point_ids
    )
    bracket = math.log(3.0 / epsilon)
    if r >= 1.0:
        bracket += 2.0 * math.log(r)
    return 1.0 + 2.0 * r * sigma * math.sqrt(max(0.0, bracket))


def gamma_multi(
    f: RepresentationFn,
    model: LatentClassModel,
    k: int,
    epsilon: float,
    directions: int = 64,
) -> float:
    """k-negative margin: 1 + 2*sqrt(2)*R*sigma*(sqrt(log k) + sqrt(log(R/eps))),
    with R dropped from the second log when R < 1; log terms clamped at 0."""
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    if k < 1:
        raise ValidationError("k must be >= 1")
    sigma = sigma_bound(f, model, directions)
    if sigma == 0.0:
        return 1.0
    r = max(
        float(np.linalg.norm(apply(f, pid, model))) for pid in model.point_ids
    )
    second = math.log((r if r >= 1.0 else 1.0) / epsilon)
    term = math.sqrt(max(0.0, math.log(k))) + math.sqrt(max(0.0, second))
    return 1.0 + 2.0 * math.sqrt(2.0) * r * sigma * term
