"""Kernel backend selection.

The compiled Cython extension is preferred when present; otherwise the
pure-numpy fallback is used.  Both expose the same functions and produce
identical results (the fallback is merely slower).  Set
``RESECTSIM_KERNELS=fallback`` or ``=compiled`` to force a backend.
"""

import os
import warnings
from contextlib import contextmanager

from . import fallback

try:
    from . import _core as compiled
except ImportError:
    compiled = None

_BACKENDS = {"fallback": fallback}
if compiled is not None:
    _BACKENDS["compiled"] = compiled


def _select_default():
    forced = os.environ.get("RESECTSIM_KERNELS", "").strip().lower()
    if forced:
        if forced not in _BACKENDS:
            raise ImportError(
                f"RESECTSIM_KERNELS={forced!r} but that backend is unavailable "
                f"(have: {sorted(_BACKENDS)})")
        return _BACKENDS[forced]
    if compiled is None:
        warnings.warn(
            "resectsim compiled kernels not found; using the slower "
            "pure-numpy fallback", RuntimeWarning, stacklevel=3)
        return fallback
    return compiled


active = _select_default()


def backend_name():
    return active.name


def set_backend(name):
    """Switch the active backend (used by the benchmark and tests)."""
    global active
    active = _BACKENDS[name]


@contextmanager
def use(name):
    previous = active.name
    set_backend(name)
    try:
        yield _BACKENDS[name]
    finally:
        set_backend(previous)
