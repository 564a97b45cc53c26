"""Kernel backend selection.

The compiled ``_ckernels`` extension is used when it imports; otherwise the
NumPy fallback in ``_pykernels``. Set ``F3A_KERNELS=python`` to force the
fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
greedy_penalized = _pykernels.greedy_penalized
greedy_maxmin = _pykernels.greedy_maxmin

if os.environ.get("F3A_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        BACKEND = "cython"
        greedy_penalized = _ckernels.greedy_penalized
        greedy_maxmin = _ckernels.greedy_maxmin


def backends() -> dict:
    """Every importable backend, keyed by name."""
    found = {"python": _pykernels}
    try:
        from . import _ckernels
    except ImportError:
        pass
    else:
        found["cython"] = _ckernels
    return found
