"""Pure-numpy implementation of the hot kernels.

Used when the compiled extension is unavailable or explicitly disabled
via ``CONTRASTLAB_PURE_PYTHON=1``.
"""

from __future__ import annotations

import math

import numpy as np

HINGE = 0
LOGISTIC = 1

_LN2 = math.log(2.0)


def loss_rows(scores: np.ndarray, family: int, margin: float) -> np.ndarray:
    """Per-row k-way loss of a (n, k) array of score differences."""
    scores = np.ascontiguousarray(scores, dtype=np.float64)
    if scores.ndim != 2 or scores.shape[1] < 1:
        raise ValueError("scores must be a (n, k) array with k >= 1")
    if family == HINGE:
        worst = -scores.min(axis=1)
        return np.maximum(0.0, 1.0 + worst / margin)
    if family == LOGISTIC:
        # log2(1 + sum exp(-v_i)), stabilized against overflow
        neg = -scores
        m = np.maximum(neg.max(axis=1), 0.0)
        inner = np.exp(-m) + np.exp(neg - m[:, None]).sum(axis=1)
        return (m + np.log(inner)) / _LN2
    raise ValueError(f"unknown loss family code {family}")


def weighted_sum(values: np.ndarray, weights: np.ndarray) -> float:
    """Compensated dot product sum_i values[i] * weights[i]."""
    prods = np.asarray(values, dtype=np.float64) * np.asarray(weights, dtype=np.float64)
    return math.fsum(prods.tolist())
