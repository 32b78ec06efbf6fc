"""Backend switch for the hot kernels.

Kernels are written twice: a numba ``@njit`` loop version and a pure-numpy
(or plain Python, where the algorithm is inherently sequential) version.
Set ``LIDAR_ROI_DISABLE_NUMBA=1`` before import to force the fallback path.
"""
import os

_DISABLED = os.environ.get("LIDAR_ROI_DISABLE_NUMBA", "").strip().lower() in ("1", "true", "yes", "on")

try:
    import numba as _numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not _DISABLED


def njit(*args, **kwargs):
    """``numba.njit(cache=True)`` when numba is importable, identity otherwise.

    Jitting still happens when the fallback is selected, so the numba kernels
    stay callable from tests and benchmarks; ``USE_NUMBA`` only decides which
    implementation the public functions dispatch to.
    """
    kwargs.setdefault("cache", True)
    if _numba is None:
        if len(args) == 1 and callable(args[0]):
            return args[0]
        return lambda f: f
    return _numba.njit(*args, **kwargs)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
