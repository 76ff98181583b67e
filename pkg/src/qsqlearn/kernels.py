"""Kernel dispatch: the compiled extension when importable, numpy otherwise.

Set ``QSQLEARN_PURE_PYTHON=1`` to force the fallback.
"""
import os

from qsqlearn import _pykernels

if os.environ.get("QSQLEARN_PURE_PYTHON"):
    _impl = _pykernels
    BACKEND = "python"
else:
    try:
        from qsqlearn import _ckernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels
        BACKEND = "python"

fwht_inplace = _impl.fwht_inplace
fwht_rows_inplace = _impl.fwht_rows_inplace
pattern_mass = _impl.pattern_mass
pattern_mass_rows = _impl.pattern_mass_rows
submasks = _pykernels.submasks

__all__ = [
    "BACKEND",
    "fwht_inplace",
    "fwht_rows_inplace",
    "pattern_mass",
    "pattern_mass_rows",
    "submasks",
]
