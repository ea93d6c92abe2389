"""Kernel backend selection.

The compiled extension is preferred when importable; the numpy fallback is
always present.  RESYNC_BACKEND=compiled|python overrides the default at
import time, and use() switches at runtime (mainly for tests and the
benchmark harness).
"""

from __future__ import annotations

import os

from . import _corr_py

_BACKENDS = {"python": _corr_py}

try:
    from . import _corr

    _BACKENDS["compiled"] = _corr
except ImportError:
    _corr = None

_env = os.environ.get("RESYNC_BACKEND")
if _env:
    if _env not in _BACKENDS:
        raise ImportError(
            f"RESYNC_BACKEND={_env!r} is not available; "
            f"choose from {sorted(_BACKENDS)}"
        )
    _active = _env
else:
    _active = "compiled" if "compiled" in _BACKENDS else "python"


def available_backends() -> tuple[str, ...]:
    return tuple(sorted(_BACKENDS))


def get_backend(name: str):
    """Return a backend module by name without changing the active one."""
    try:
        return _BACKENDS[name]
    except KeyError:
        raise ValueError(f"unknown backend {name!r}; choose from {sorted(_BACKENDS)}") from None


def use(name: str) -> None:
    """Switch the active backend for subsequent recoveries."""
    global _active
    get_backend(name)
    _active = name


def active_name() -> str:
    return _active


def active():
    """The backend module currently used by the recovery pipeline."""
    return _BACKENDS[_active]
