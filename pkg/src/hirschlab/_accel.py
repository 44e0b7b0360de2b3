"""Backend selection for the hot kernels.

``HIRSCHLAB_BACKEND=numpy`` forces the vectorised numpy implementations;
otherwise numba is used when importable. ``HIRSCHLAB_THREADS`` sets the
default worker count for ensemble runs.
"""
import os
import warnings

BACKEND_ENV = "HIRSCHLAB_BACKEND"
THREADS_ENV = "HIRSCHLAB_THREADS"

# numba fixes its pool size at import; let a requested thread count exceed the
# core count (results do not depend on it, only wall time does).
if os.environ.get(THREADS_ENV) and "NUMBA_NUM_THREADS" not in os.environ:
    _want = int(os.environ[THREADS_ENV])
    if _want > (os.cpu_count() or 1):
        os.environ["NUMBA_NUM_THREADS"] = str(_want)

try:
    import numba
    # an old system TBB only triggers a notice; numba falls back to another layer
    warnings.filterwarnings("ignore", message="The TBB threading layer", category=numba.NumbaWarning)
    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    _HAVE_NUMBA = False


def backend():
    want = os.environ.get(BACKEND_ENV, "numba").strip().lower()
    if want == "numpy" or not _HAVE_NUMBA:
        return "numpy"
    return "numba"


def use_numba():
    return backend() == "numba"


def default_threads():
    raw = os.environ.get(THREADS_ENV)
    if raw:
        return max(1, int(raw))
    return os.cpu_count() or 1


def njit(*args, **kwargs):
    """``numba.njit`` when available, identity decorator otherwise.

    Kernels are always compiled if numba exists; the env flag only decides
    which implementation the dispatchers call.
    """
    if _HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]):
        return args[0]
    return lambda f: f


def set_threads(n):
    """Set the numba worker count; returns the count actually in effect."""
    if not _HAVE_NUMBA:
        return 1
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)
    return n


def active_threads():
    """Worker count numba will use for the next parallel kernel."""
    if not _HAVE_NUMBA:
        return 1
    return numba.get_num_threads()
