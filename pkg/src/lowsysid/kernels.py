"""Kernel dispatch: compiled extension when importable, numpy otherwise.

Set ``LOWSYSID_PURE_PYTHON=1`` to force the numpy path.
"""
import os

from . import _pykernels

BACKEND = "python"

if not os.environ.get("LOWSYSID_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
else:
    _impl = _pykernels

causal_filter = _impl.causal_filter
anticausal_filter = _impl.anticausal_filter
antidiag_sum = _impl.antidiag_sum
modal_terms = _impl.modal_terms

__all__ = ["BACKEND", "causal_filter", "anticausal_filter", "antidiag_sum", "modal_terms"]
