"""Kernel backend selection.

``SHADOWLAB_BACKEND=numpy`` forces the pure-numpy kernels; ``numba`` (the
default when numba imports) uses the jitted ones.  Both produce the same
numbers up to floating-point reassociation.
"""

import os

try:
    import numba  # noqa: F401

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is installed in CI
    HAVE_NUMBA = False

_VALID = ("numba", "numpy")


def _initial_backend():
    name = os.environ.get("SHADOWLAB_BACKEND", "").strip().lower()
    if name not in _VALID:
        name = "numba" if HAVE_NUMBA else "numpy"
    if name == "numba" and not HAVE_NUMBA:
        name = "numpy"
    return name


_current = _initial_backend()


def get_backend():
    return _current


def set_backend(name):
    """Switch kernels at runtime; returns the previous backend name."""
    global _current
    if name not in _VALID:
        raise ValueError(f"unknown backend {name!r}; expected one of {_VALID}")
    if name == "numba" and not HAVE_NUMBA:
        raise RuntimeError("numba backend requested but numba is not importable")
    previous, _current = _current, name
    return previous
