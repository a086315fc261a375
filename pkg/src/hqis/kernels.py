"""Backend selection for the audit's inner loop.

The compiled extension is used when it imports; otherwise, or when
``HQIS_PURE_PYTHON=1`` is set, the pure-Python version is used.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("HQIS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

objective = _impl.objective
coordinate_search = _impl.coordinate_search

__all__ = ["BACKEND", "objective", "coordinate_search"]
