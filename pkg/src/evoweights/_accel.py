"""Backend switch for the compiled kernels.

Set ``EVOWEIGHTS_NUMBA=0`` in the environment to force the pure-numpy code
paths. When numba is missing the numpy paths are used regardless.
"""
from __future__ import annotations

import contextlib
import os

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None

_FALSY = {"0", "false", "no", "off", ""}
_use_numba = HAVE_NUMBA and os.environ.get("EVOWEIGHTS_NUMBA", "1").strip().lower() not in _FALSY


def njit(*args, **kwargs):
    """``numba.njit`` when available, otherwise a no-op decorator."""
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda fn: fn


def use_numba() -> bool:
    return _use_numba


def backend() -> str:
    return "numba" if _use_numba else "numpy"


@contextlib.contextmanager
def backend_override(name: str):
    """Temporarily select ``"numba"`` or ``"numpy"``; used by tests and benchmarks."""
    global _use_numba
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba is not installed")
    previous = _use_numba
    _use_numba = name == "numba"
    try:
        yield
    finally:
        _use_numba = previous
