"""Counterexample constructions: small models with a two-member function
class {f0, f1} where unsupervised ERM picks a representation that is bad
for the downstream tasks, plus closed-form predictions used to
cross-check the enumeration code path."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .model import FiniteDistribution, LatentClassModel
from .representation import RepresentationFn, zero_representation


@dataclass(frozen=True)
class Scenario:
    name: str
    model: LatentClassModel
    f0: RepresentationFn
    f1: RepresentationFn
    params: dict


def build_fig1a(r: float = 5.0) -> Scenario:
    """Two singleton classes. f1 separates them along the first axis but
    adds a large spurious component along the second, so the best linear
    classifier on f1 is perfect while the mean classifier is terrible.
    This realizes the one-point-per-class picture; the geometry is a
    reconstruction, flagged as such in reports."""
    if r <= 0:
        raise ValidationError("r must be positive")
    model = LatentClassModel(
        ambient_dim=2,
        points={"p1": [1.0, 0.0], "p2": [-1.0, 0.0]},
        classes={
            "c1": FiniteDistribution.uniform(["p1"]),
            "c2": FiniteDistribution.uniform(["p2"]),
        },
        rho=FiniteDistribution.uniform(["c1", "c2"]),
    )
    bound = math.sqrt(1.0 + 4.0 * r * r) + 1.0
    f1 = RepresentationFn(
        kind="table",
        d=2,
        norm_bound=bound,
        table={"p1": [1.0, r], "p2": [-1.0, 2.0 * r]},
    )
    return Scenario(
        name="fig1a",
        model=model,
        f0=zero_representation(model, 2, norm_bound=bound),
        f1=f1,
        params={"r": r},
    )


def _clustered(name: str, n_clusters: int, classes_per_cluster: int, r: float) -> Scenario:
    """Clusters of classes sharing the same two representation values.

    Each class is uniform over two points; f1 sends the cluster's first
    point to 1.5r * e_i and the second to 0.5r * e_i, so f1 sees only
    the cluster, never the class."""
    if r <= 0:
        raise ValidationError("r must be positive")
    if n_clusters < 2:
        raise ValidationError("need at least two clusters")
    points, classes, table = {}, {}, {}
    for i in range(n_clusters):
        e = np.zeros(n_clusters)
        e[i] = 1.0
        hi, lo = f"hi{i}", f"lo{i}"
        points[hi] = e
        points[lo] = 0.5 * e
        table[hi] = 1.5 * r * e
        table[lo] = 0.5 * r * e
        for j in range(classes_per_cluster):
            cid = f"c{i}_{j}" if classes_per_cluster > 1 else f"c{i}"
            classes[cid] = FiniteDistribution.uniform([hi, lo])
    model = LatentClassModel(
        ambient_dim=n_clusters,
        points=points,
        classes=classes,
        rho=FiniteDistribution.uniform(classes),
    )
    f1 = RepresentationFn(kind="table", d=n_clusters, norm_bound=1.5 * r, table=table)
    return Scenario(
        name=name,
        model=model,
        f0=zero_representation(model, n_clusters, norm_bound=1.5 * r),
        f1=f1,
        params={"n": n_clusters, "r": r, "classes_per_cluster": classes_per_cluster},
    )


def build_appC1(n: int = 8, r: float = 10.0) -> Scenario:
    """n two-point classes on orthogonal axes; one class per cluster."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    return _clustered("appC1", n, 1, r)


def build_fig1b(r: float = 10.0) -> Scenario:
    """The two-class instance of the two-point construction."""
    return _clustered("fig1b", 2, 1, r)


def build_appC2(n: int = 8, r: float = 2.0) -> Scenario:
    """n clusters x n classes; f1 collapses classes within a cluster, so
    extra negative samples raise its loss via intra-cluster collisions."""
    if n < 2:
        raise ValidationError("n must be >= 2")
    return _clustered("appC2", n, n, r)


def build(name: str, **params) -> Scenario:
    builders = {
        "fig1a": build_fig1a,
        "fig1b": build_fig1b,
        "appC1": build_appC1,
        "appC2": build_appC2,
    }
    if name not in builders:
        raise ValidationError(f"unknown counterexample {name!r}")
    return builders[name](**params)


def predicted_unsup_loss_f1(scenario: Scenario, k: int) -> float:
    """Closed-form hinge loss of f1 with k negatives on the clustered
    scenarios, derived independently of the enumeration code.

    The anchor magnitude s and positive magnitude s+ are 1.5r or 0.5r
    with equal probability; each negative hits the anchor's cluster with
    probability 1/n_clusters and is then 1.5r or 0.5r; the hinge depends
    on the negatives only through the largest same-cluster magnitude m:
    loss = E[max(0, 1 + s*m - s*s+)].
    """
    if scenario.name == "fig1a":
        raise ValidationError("no clustered closed form for fig1a")
    n = scenario.params["n"]
    r = scenario.params["r"]
    hi, lo = 1.5 * r, 0.5 * r
    # distribution of the max same-cluster negative magnitude
    p_zero = (1.0 - 1.0 / n) ** k
    p_le_lo = (1.0 - 1.0 / (2.0 * n)) ** k
    m_dist = [(0.0, p_zero), (lo, p_le_lo - p_zero), (hi, 1.0 - p_le_lo)]
    total = 0.0
    for s in (hi, lo):
        for sp in (hi, lo):
            for m, pm in m_dist:
                total += 0.25 * pm * max(0.0, 1.0 + s * m - s * sp)
    return total


def predicted_pick(scenario: Scenario, k: int) -> str:
    """Which member population ERM should select (hinge, k negatives)."""
    loss_f0 = 1.0
    if scenario.name == "fig1a":
        if k != 1:
            raise ValidationError("fig1a prediction is for k = 1")
        r = scenario.params["r"]
        # collision (prob 1/2) scores 0, loss 1; distinct pairs: anchor p1
        # scores 2 - r^2 (hurts for large r), anchor p2 scores 2 + 2r^2
        loss_f1 = 0.5 + 0.25 * max(0.0, r * r - 1.0)
    else:
        loss_f1 = predicted_unsup_loss_f1(scenario, k)
    return "f0" if loss_f0 <= loss_f1 else "f1"


def predicted_avg_binary_sup_f1(scenario: Scenario) -> float:
    """Mean-classifier average binary hinge loss of f1, closed form.

    Same-cluster pairs have identical class means (loss 1); distinct
    clusters are separated with margin at least 0.5 r^2."""
    if scenario.name == "fig1a":
        raise ValidationError("no clustered closed form for fig1a")
    n = scenario.params["n"]
    cpc = scenario.params["classes_per_cluster"]
    r = scenario.params["r"]
    total_classes = n * cpc
    frac_same = (cpc - 1) / (total_classes - 1)
    # point magnitude 1.5r or 0.5r, mean gap r along the cluster axis
    cross = 0.5 * max(0.0, 1.0 - 1.5 * r * r) + 0.5 * max(0.0, 1.0 - 0.5 * r * r)
    return frac_same * 1.0 + (1.0 - frac_same) * cross
