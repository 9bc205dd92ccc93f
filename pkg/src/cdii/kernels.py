"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise (or with
``CDII_PURE_PYTHON=1`` in the environment) the numpy implementation is used.
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("CDII_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl
    except ImportError:
        _impl = _kernels_py

BACKEND = _impl.BACKEND
assemble_stencil = _impl.assemble_stencil
interpolate = _impl.interpolate
integrate_segments = _impl.integrate_segments


def compiled():
    """The compiled module, or None when it is not available."""
    try:
        from . import _kernels
    except ImportError:
        return None
    return _kernels


__all__ = ["BACKEND", "assemble_stencil", "interpolate", "integrate_segments", "compiled"]
