"""Kernel selection: compiled extension when available, numpy fallback otherwise.

Set RELUFORGE_PURE=1 to force the fallback (useful for benchmarking and for
verifying that both paths pivot identically).
"""

from __future__ import annotations

import os

from ._kernels_py import AT_LOWER, AT_UPPER, BASIC, FREE

if os.environ.get("RELUFORGE_PURE", "0") == "1":
    from . import _kernels_py as _impl
else:
    try:
        from . import _speedups as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import _kernels_py as _impl

IMPLEMENTATION = _impl.IMPLEMENTATION
choose_entering = _impl.choose_entering
ratio_test = _impl.ratio_test
eta_update = _impl.eta_update

__all__ = [
    "AT_LOWER",
    "AT_UPPER",
    "FREE",
    "BASIC",
    "IMPLEMENTATION",
    "choose_entering",
    "ratio_test",
    "eta_update",
]
