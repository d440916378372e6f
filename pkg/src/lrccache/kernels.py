"""Kernel selection: the compiled extension when importable, else numpy.

Set ``LRCCACHE_PURE=1`` to force the fallback.
"""
import os

from . import _kernels_py

BACKEND = "python"
_impl = _kernels_py
if os.environ.get("LRCCACHE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

select_victim = _impl.select_victim
midrank_percentile = _impl.midrank_percentile

__all__ = ["BACKEND", "select_victim", "midrank_percentile"]
