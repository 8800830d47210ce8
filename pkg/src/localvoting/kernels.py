"""Kernel backend selection.

The compiled extension is used when it was built and ``LOCALVOTING_PURE`` is
unset; otherwise the numpy reference implementation is loaded.
"""
import os

from . import _pykernels as python_backend

try:
    if os.environ.get("LOCALVOTING_PURE"):
        raise ImportError("pure backend requested")
    from . import _ckernels as _impl
    BACKEND = "cython"
except ImportError:
    _impl = python_backend
    BACKEND = "python"

block_counts = _impl.block_counts
free_slots = _impl.free_slots
transferable_slots = _impl.transferable_slots
exchange_donors = _impl.exchange_donors
greedy_admit = _impl.greedy_admit
lqf_order = _impl.lqf_order
lyui_winners = _impl.lyui_winners


def compiled_backend():
    """The compiled module, or None when it is unavailable."""
    try:
        from . import _ckernels
    except ImportError:
        return None
    return _ckernels
