# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: per-row k-way losses and compensated reduction.

Mirrors contrastlab.kernels._numpy exactly; selected at import time.
"""

from libc.math cimport exp, log, fmax, fabs

import numpy as np
cimport numpy as cnp

cnp.import_array()

HINGE = 0
LOGISTIC = 1

cdef double _LN2 = log(2.0)


def loss_rows(scores, int family, double margin):
    """Per-row k-way loss of a (n, k) array of score differences."""
    cdef cnp.ndarray[cnp.float64_t, ndim=2] s = np.ascontiguousarray(scores, dtype=np.float64)
    if s.shape[1] < 1:
        raise ValueError("scores must be a (n, k) array with k >= 1")
    cdef Py_ssize_t n = s.shape[0], k = s.shape[1], i, j
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(n, dtype=np.float64)
    cdef double worst, m, inner, v
    if family == HINGE:
        for i in range(n):
            worst = -s[i, 0]
            for j in range(1, k):
                if -s[i, j] > worst:
                    worst = -s[i, j]
            out[i] = fmax(0.0, 1.0 + worst / margin)
    elif family == LOGISTIC:
        for i in range(n):
            m = 0.0
            for j in range(k):
                if -s[i, j] > m:
                    m = -s[i, j]
            inner = exp(-m)
            for j in range(k):
                inner += exp(-s[i, j] - m)
            out[i] = (m + log(inner)) / _LN2
    else:
        raise ValueError(f"unknown loss family code {family}")
    return out


def weighted_sum(values, weights):
    """Compensated (Neumaier) dot product sum_i values[i] * weights[i]."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] v = np.ascontiguousarray(values, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.ascontiguousarray(weights, dtype=np.float64)
    if v.shape[0] != w.shape[0]:
        raise ValueError("values and weights must have equal length")
    cdef Py_ssize_t i, n = v.shape[0]
    cdef double total = 0.0, comp = 0.0, term, t
    for i in range(n):
        term = v[i] * w[i]
        t = total + term
        if fabs(total) >= fabs(term):
            comp += (total - t) + term
        else:
            comp += (term - t) + total
        total = t
    return total + comp
