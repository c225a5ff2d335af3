"""Counter-based random number generation.

All samplers in the package derive their randomness from Philox, a
counter-based generator: a 64-bit user seed keys the stream and each
logical work item (tuple index, trial index) gets its own disjoint
counter block. Serial and parallel execution therefore draw identical
numbers.
"""

from __future__ import annotations

import numpy as np

# Counter advance per work item; each item draws far fewer values.
_STRIDE = 1 << 20


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """Generator for work item ``index`` of the stream keyed by ``seed``."""
    bits = np.random.Philox(key=np.uint64(seed & 0xFFFFFFFFFFFFFFFF))
    if index:
        bits.advance(index * _STRIDE)
    return np.random.Generator(bits)


def categorical(gen: np.random.Generator, cumprobs: np.ndarray) -> int:
    """Inverse-CDF draw from a distribution given its cumulative probabilities."""
    u = gen.random()
    return int(np.searchsorted(cumprobs, u, side="right"))
