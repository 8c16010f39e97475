"""Kernel backend selection.

Prefers the compiled extension; falls back to the numpy implementation
when the extension is missing.  GOFT_KERNEL=python|compiled forces a
backend (the latter raises if the extension is absent).
"""

from __future__ import annotations

import os

from . import _kernels_py

_choice = os.environ.get("GOFT_KERNEL", "auto").lower()

if _choice == "python":
    _impl = _kernels_py
else:
    try:
        from . import _kernels as _impl  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise ImportError(
                "GOFT_KERNEL=compiled but the goft._kernels extension is not built"
            )
        _impl = _kernels_py

COMPILED = bool(_impl.COMPILED)
BACKEND = "compiled" if COMPILED else "python"

apply_blocks = _impl.apply_blocks
backward_blocks = _impl.backward_blocks


def available_backends():
    """Name -> module for every importable backend (used by the benchmark)."""
    backends = {"python": _kernels_py}
    try:
        from . import _kernels
        backends["compiled"] = _kernels
    except ImportError:
        pass
    return backends
