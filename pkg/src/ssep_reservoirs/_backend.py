"""Backend selection: compiled event loops when available, Python otherwise.

Set SSEP_BACKEND=python to force the fallback, SSEP_BACKEND=compiled to
require the extension (raising if it is missing); the default "auto"
prefers the extension.
"""

from __future__ import annotations

import os

_choice = os.environ.get("SSEP_BACKEND", "auto")
if _choice not in ("auto", "python", "compiled"):
    raise RuntimeError(f"SSEP_BACKEND must be auto, python or compiled, not {_choice!r}")

kernels = None
if _choice in ("auto", "compiled"):
    try:
        from . import _core as kernels  # type: ignore[no-redef]
    except ImportError:
        if _choice == "compiled":
            raise
        kernels = None
if kernels is None:
    from . import _core_py as kernels  # type: ignore[no-redef]


def backend_name() -> str:
    """"compiled" when the C extension is active, else "python"."""
    return kernels.BACKEND
