"""Kernel backend selection.

Two interchangeable kernel modules exist: a numba one (fast, compiled) and a
pure-numpy one. They are bit-identical in output, so the choice is purely a
speed/dependency trade-off. Selection order:

1. ``set_backend(name)`` called from code (tests, benchmarks);
2. the ``ENDOGRID_BACKEND`` environment variable (``numba`` or ``numpy``);
3. numba if it imports, numpy otherwise.
"""

from __future__ import annotations

import importlib
import os
import warnings

from .errors import ConfigError

_ENV_VAR = "ENDOGRID_BACKEND"
_VALID = ("numba", "numpy")

_forced: str | None = None
_active = None
_active_name: str | None = None


def set_backend(name: str | None) -> None:
    """Force a kernel backend by name; ``None`` restores automatic choice."""
    global _forced, _active, _active_name
    if name is not None and name not in _VALID:
        raise ConfigError(
            f"unknown backend {name!r}; valid choices: {', '.join(_VALID)}")
    _forced = name
    _active = None
    _active_name = None


def _resolve_name() -> str:
    if _forced is not None:
        return _forced
    env = os.environ.get(_ENV_VAR)
    if env is not None:
        if env not in _VALID:
            raise ConfigError(
                f"{_ENV_VAR}={env!r} is not a valid backend; "
                f"valid choices: {', '.join(_VALID)}")
        return env
    try:
        importlib.import_module("numba")
    except ImportError:
        return "numpy"
    return "numba"


def get_backend():
    """Return the active kernel module (lazy import, cached)."""
    global _active, _active_name
    if _active is not None:
        return _active
    name = _resolve_name()
    if name == "numba":
        try:
            _active = importlib.import_module("endogrid._kernels_numba")
        except ImportError as exc:
            if _forced == "numba" or os.environ.get(_ENV_VAR) == "numba":
                raise ConfigError(f"numba backend requested but unavailable: {exc}")
            warnings.warn("numba unavailable, falling back to numpy kernels")
            name = "numpy"
    if name == "numpy":
        _active = importlib.import_module("endogrid._kernels_numpy")
    _active_name = name
    return _active


def active_backend_name() -> str:
    get_backend()
    return _active_name
