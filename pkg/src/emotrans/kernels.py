"""Backend selection for the hot loops.

The compiled extension is preferred; set ``EMOTRANS_BACKEND=python`` to force
the numpy fallback. ``use_backend`` switches at runtime (tests, benchmarks).
"""
from __future__ import annotations

import contextlib
import logging
import os
from types import ModuleType

from . import _fallback

log = logging.getLogger(__name__)

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

BACKENDS: dict[str, ModuleType] = {"python": _fallback}
if _compiled is not None:
    BACKENDS["compiled"] = _compiled


def _initial() -> str:
    wanted = os.environ.get("EMOTRANS_BACKEND", "").strip().lower()
    if wanted:
        if wanted not in BACKENDS:
            log.warning("backend %r unavailable, using python fallback", wanted)
            return "python"
        return wanted
    return "compiled" if "compiled" in BACKENDS else "python"


_active = _initial()


def backend_name() -> str:
    return _active


def set_backend(name: str) -> None:
    global _active
    if name not in BACKENDS:
        raise ValueError(f"unknown or unavailable backend {name!r}; have {sorted(BACKENDS)}")
    _active = name


@contextlib.contextmanager
def use_backend(name: str):
    previous = _active
    set_backend(name)
    try:
        yield
    finally:
        set_backend(previous)


def tile_windows(times, bits, window, step):
    return BACKENDS[_active].tile_windows(times, bits, window, step)


def batch_transition_counts(times, bits, offsets, window, step):
    return BACKENDS[_active].batch_transition_counts(times, bits, offsets, window, step)


def best_split(X, y, samples, features, max_features, min_leaf=1):
    return BACKENDS[_active].best_split(X, y, samples, features, max_features, min_leaf)
