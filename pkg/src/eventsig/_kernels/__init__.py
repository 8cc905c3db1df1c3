"""Kernel backend selection.

The compiled extension is preferred; the NumPy fallback keeps the package
fully functional (same call signatures, same results) when no compiler was
available at install time. ``EVENTSIG_BACKEND=python`` forces the fallback.
"""
from __future__ import annotations

import os

from . import _pyref

if os.environ.get("EVENTSIG_BACKEND", "").lower() == "python":
    _impl = _pyref
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pyref

BACKEND: str = _impl.BACKEND
concat_product = _impl.concat_product
segment_exp = _impl.segment_exp
chen_signature = _impl.chen_signature
logrank_scan = _impl.logrank_scan

__all__ = [
    "BACKEND",
    "concat_product",
    "segment_exp",
    "chen_signature",
    "logrank_scan",
]
