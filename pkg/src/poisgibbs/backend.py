"""Kernel backend selection: numba-compiled loops or vectorized numpy.

Both backends implement the same slot-addressed counter RNG, so they
produce bitwise-identical draws; only speed differs.  Selection order:

1. ``POISGIBBS_BACKEND`` environment variable (``numba`` | ``numpy`` | ``auto``)
2. ``auto`` (default): numba if importable, else numpy.

``force_backend`` temporarily overrides the choice (used by tests and by
the ``bench`` subcommand).
"""

import os
import warnings
from contextlib import contextmanager

_VALID = ("auto", "numba", "numpy")
_forced = None
_modules = {}


def _env_choice():
    val = os.environ.get("POISGIBBS_BACKEND", "auto").strip().lower()
    if val not in _VALID:
        warnings.warn(f"POISGIBBS_BACKEND={val!r} not in {_VALID}; using 'auto'")
        val = "auto"
    return val


def numba_available():
    try:
        import numba  # noqa: F401
    except ImportError:
        return False
    return True


def backend_name():
    """Resolved backend name, 'numba' or 'numpy'."""
    choice = _forced if _forced is not None else _env_choice()
    if choice == "numba" and not numba_available():
        warnings.warn("numba requested but not importable; falling back to numpy")
        choice = "numpy"
    if choice == "auto":
        choice = "numba" if numba_available() else "numpy"
    return choice


def kernels():
    """Kernel module for the active backend (import is cached)."""
    name = backend_name()
    mod = _modules.get(name)
    if mod is None:
        if name == "numba":
            from . import _kernels_nb as mod
        else:
            from . import _kernels_py as mod
        _modules[name] = mod
    return mod


@contextmanager
def force_backend(name):
    """Temporarily pin the backend ('numba' or 'numpy')."""
    global _forced
    if name not in ("numba", "numpy"):
        raise ValueError(f"unknown backend {name!r}")
    prev = _forced
    _forced = name
    try:
        yield
    finally:
        _forced = prev
