"""Kernel backend selection.

The compiled extension (Cython) is preferred; the pure-Python fallback is
used when the extension was not built.  Both expose ``SettleProgram`` and
``AnnealProgram`` with identical semantics and RNG streams.
"""

from __future__ import annotations

import os

from . import codes  # noqa: F401  (re-exported opcode constants)

if os.environ.get("FLUIDC_KERNEL") == "pure":
    from . import pure as _impl

    BACKEND = "pure"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        from . import pure as _impl

        BACKEND = "pure"

SettleProgram = _impl.SettleProgram
AnnealProgram = _impl.AnnealProgram


def available_backends() -> list[str]:
    names = ["pure"]
    try:
        from . import _core  # noqa: F401

        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get_backend(name: str):
    """Return the backend module for explicit selection (tests, benchmark)."""
    if name == "pure":
        from . import pure

        return pure
    if name == "compiled":
        from . import _core

        return _core
    raise ValueError(f"unknown kernel backend {name!r}")
