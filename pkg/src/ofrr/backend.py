"""Kernel backend selection.

The compiled extension is preferred; the pure-numpy module is the fallback.
Set OFRR_PURE_PYTHON=1 to force the fallback (used by the backend-equivalence
tests and the bench comparison).
"""

from __future__ import annotations

import os

from . import _kernels_py

if os.environ.get("OFRR_PURE_PYTHON") == "1":
    kernels = _kernels_py
else:
    try:
        from . import _kernels as kernels  # type: ignore[no-redef]
    except ImportError:
        kernels = _kernels_py

ACTIVE = kernels.BACKEND_NAME


def available_backends() -> dict:
    """Name -> module map of importable kernel backends."""
    out = {"python": _kernels_py}
    try:
        from . import _kernels

        out["compiled"] = _kernels
    except ImportError:
        pass
    return out
