"""Select the compiled kernel extension when available, numpy otherwise.

Set HYPERCONV_BACKEND=py (or =c) to force a choice; the default "auto"
prefers the compiled extension.  Both backends are bit-compatible.
"""

import os

from . import _kernels_py

_choice = os.environ.get("HYPERCONV_BACKEND", "auto").lower()
if _choice not in ("auto", "c", "py"):
    raise ValueError(f"HYPERCONV_BACKEND must be auto|c|py, got {_choice!r}")

_ckernels = None
if _choice in ("auto", "c"):
    try:
        from . import _ckernels  # noqa: F401
    except ImportError:
        _ckernels = None
        if _choice == "c":
            raise ImportError("compiled kernels requested via HYPERCONV_BACKEND=c but not built")

kernels = _ckernels if _ckernels is not None else _kernels_py


def backend_name() -> str:
    return "compiled" if kernels is _ckernels and _ckernels is not None else "numpy"


def available_backends():
    out = {"numpy": _kernels_py}
    if _ckernels is not None:
        out["compiled"] = _ckernels
    return out
