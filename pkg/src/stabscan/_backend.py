"""Backend selection for the hot numeric kernels.

Two implementations of every hot kernel exist: a vectorized pure-numpy one
and a compiled numba one.  The active default is chosen once at import time
from the ``STABSCAN_BACKEND`` environment variable:

* ``auto`` (or unset): numba when importable, numpy otherwise
* ``numba``: force numba, raise if it cannot be imported
* ``numpy``: force the pure-numpy path

Every scan entry point also accepts an explicit ``backend=`` argument, which
wins over the environment.  ``benchmarks/bench_backends.py`` compares the two.
"""

from __future__ import annotations

import os

try:
    import numba  # noqa: F401

    NUMBA_AVAILABLE = True
except ImportError:
    NUMBA_AVAILABLE = False

VALID_BACKENDS = ("numpy", "numba")


def _resolve_default() -> str:
    choice = os.environ.get("STABSCAN_BACKEND", "auto").strip().lower()
    if choice in ("", "auto"):
        return "numba" if NUMBA_AVAILABLE else "numpy"
    if choice == "numba":
        if not NUMBA_AVAILABLE:
            raise ImportError(
                "STABSCAN_BACKEND=numba but numba is not importable"
            )
        return "numba"
    if choice == "numpy":
        return "numpy"
    raise ValueError(
        f"STABSCAN_BACKEND must be one of auto/numpy/numba, got {choice!r}"
    )


DEFAULT_BACKEND = _resolve_default()


def resolve_backend(backend: str | None) -> str:
    """Map an optional user choice onto a concrete backend name."""
    if backend is None:
        return DEFAULT_BACKEND
    name = backend.strip().lower()
    if name == "auto":
        return DEFAULT_BACKEND
    if name not in VALID_BACKENDS:
        raise ValueError(f"unknown backend {backend!r}")
    if name == "numba" and not NUMBA_AVAILABLE:
        raise ImportError("numba backend requested but numba is not importable")
    return name
