"""JIT switch shared by the hot kernels.

Numba is used when importable unless ``AOISCHED_DISABLE_NUMBA`` is set to a
truthy value, in which case every kernel dispatches to its pure-numpy twin.
Both twins stay importable so they can be compared against each other.
"""

import os

_flag = os.environ.get("AOISCHED_DISABLE_NUMBA", "").strip().lower()
DISABLED_BY_ENV = _flag not in ("", "0", "false", "no", "off")

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is optional
    numba = None
    HAVE_NUMBA = False

USE_NUMBA = HAVE_NUMBA and not DISABLED_BY_ENV

if HAVE_NUMBA:
    prange = numba.prange

    def njit(*args, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        return numba.njit(*args, **kwargs)

else:  # pragma: no cover
    prange = range

    def njit(*args, **kwargs):
        if len(args) == 1 and callable(args[0]) and not kwargs:
            return args[0]
        return lambda f: f


def set_threads(k):
    """Cap numba's worker pool; no-op on the numpy path."""
    if not HAVE_NUMBA or k is None:
        return
    numba.set_num_threads(max(1, min(int(k), numba.config.NUMBA_NUM_THREADS)))


def backend():
    return "numba" if USE_NUMBA else "numpy"


if HAVE_NUMBA and "NUMBA_THREADING_LAYER_PRIORITY" not in os.environ:
    # An old system TBB gets probed (and rejected, with a warning) first by
    # default; prefer OpenMP and the built-in workqueue.
    numba.config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]
