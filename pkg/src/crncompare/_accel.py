"""Backend selection for the hot kernels.

Kernels are plain Python functions over numpy arrays. By default they are
compiled with numba; setting CRNCOMPARE_DISABLE_NUMBA=1 (or a missing numba)
runs the same code interpreted, which is slow but bit-identical.
"""
import logging
import os

log = logging.getLogger(__name__)

ENV_FLAG = "CRNCOMPARE_DISABLE_NUMBA"

# skip the TBB probe (old TBB builds only emit warnings); workqueue is always present
os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")

try:
    import numba
    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False


def numba_enabled():
    return HAVE_NUMBA and os.environ.get(ENV_FLAG, "").strip() not in ("1", "true", "yes")


def compile_kernel(fn, parallel=False):
    """numba-compiled version of ``fn`` (nogil, cached)."""
    return numba.njit(cache=True, nogil=True, parallel=parallel)(fn)


def set_threads(n):
    if n is None or not HAVE_NUMBA:
        return
    n = max(1, min(int(n), numba.config.NUMBA_NUM_THREADS))
    numba.set_num_threads(n)


def default_threads():
    return os.cpu_count() or 1
