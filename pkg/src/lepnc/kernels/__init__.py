"""Kernel backend selection: compiled extension if available, numpy otherwise."""

from . import _pykernels

try:
    from . import _ckernels

    cell_tables = _ckernels.cell_tables
    BACKEND = "cython"
except ImportError:  # pragma: no cover - build-env dependent
    _ckernels = None
    cell_tables = _pykernels.cell_tables
    BACKEND = "python"

__all__ = ["cell_tables", "BACKEND", "_pykernels", "_ckernels"]
