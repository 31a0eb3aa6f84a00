"""Backend switch for the hot numeric kernels.

The inner loops (persistence reduction, shortest paths) are compiled with
numba when available. Setting the environment variable

    SPECTRALPH_BACKEND=python

before import forces the pure-Python/NumPy fallback, which runs the exact
same source uncompiled. ``benchmarks/kernel_backends.py`` times both paths.
"""

import os
import warnings

_requested = os.environ.get("SPECTRALPH_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "python"):
    warnings.warn(
        f"unknown SPECTRALPH_BACKEND={_requested!r}, falling back to 'numba'",
        stacklevel=1,
    )
    _requested = "numba"

USING_NUMBA = False
if _requested == "numba":
    try:
        import numba as _numba

        USING_NUMBA = True
    except ImportError:
        warnings.warn(
            "numba not importable, kernels run on the pure-Python fallback",
            stacklevel=1,
        )


def njit(**options):
    """Return ``numba.njit`` with the given options, or the identity decorator."""
    if USING_NUMBA:
        return _numba.njit(**options)

    def passthrough(func):
        return func

    return passthrough


def backend_name() -> str:
    return "numba" if USING_NUMBA else "python"
