"""Hot-kernel backend selection.

The compiled extension (``contrastlab._fastkern``) is preferred; the
numpy implementation is the fallback. Set ``CONTRASTLAB_PURE_PYTHON=1``
to force the fallback, e.g. for benchmarking or debugging.
"""

from __future__ import annotations

import os

from ._numpy import HINGE, LOGISTIC

if os.environ.get("CONTRASTLAB_PURE_PYTHON"):
    from ._numpy import loss_rows, weighted_sum

    BACKEND = "numpy"
else:
    try:
        from contrastlab._fastkern import loss_rows, weighted_sum

        BACKEND = "cython"
    except ImportError:  # extension not built
        from ._numpy import loss_rows, weighted_sum

        BACKEND = "numpy"

__all__ = ["loss_rows", "weighted_sum", "HINGE", "LOGISTIC", "BACKEND"]
