"""Numerical core with a compiled fast path and a NumPy fallback.

The Cython extension is preferred when importable; set the environment
variable ``EBGP_DISABLE_EXTENSION=1`` to force the fallback (used by the
backend benchmark and the equivalence tests).
"""

import os

from . import _fallback as _fb

if os.environ.get("EBGP_DISABLE_EXTENSION") == "1":
    _impl = _fb
    BACKEND = "fallback"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _fb
        BACKEND = "fallback"

pairwise_sq_dists = _impl.pairwise_sq_dists
cross_sq_dists = _impl.cross_sq_dists
affinity_stats = _impl.affinity_stats

# The elementwise exp is faster through NumPy's SIMD kernels than through a
# scalar libm loop, so Gram assembly uses the NumPy implementation on both
# backends; the compiled module accelerates the distance and affinity loops.
gram_from_sq_dists = _fb.gram_from_sq_dists


def backend_name():
    """Name of the active backend: "compiled" or "fallback"."""
    return BACKEND
