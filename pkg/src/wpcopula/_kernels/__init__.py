"""Kernel backend selection.

The compiled Cython extension is preferred when importable; otherwise the
NumPy implementations take over transparently.  Set ``WPCOPULA_BACKEND`` to
``numpy`` or ``cython`` to force a choice (forcing ``cython`` raises if the
extension is missing, which keeps benchmark results honest).
"""

from __future__ import annotations

import os

from . import _backend_numpy

_forced = os.environ.get("WPCOPULA_BACKEND", "").lower()

if _forced == "numpy":
    _impl = _backend_numpy
    BACKEND = "numpy"
elif _forced == "cython":
    from . import _core as _impl
    BACKEND = "cython"
else:
    try:
        from . import _core as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _backend_numpy
        BACKEND = "numpy"

pair_stat_sums = _impl.pair_stat_sums
knn_cdf_batch = _impl.knn_cdf_batch
knn_reg_sse = _impl.knn_reg_sse
knn_neighbors = _impl.knn_neighbors
