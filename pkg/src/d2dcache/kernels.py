"""Backend selection for the hot kernels.

The compiled ``_core`` extension is used when it was built; otherwise, or
when ``D2DCACHE_PURE_PYTHON=1`` is set, the numpy fallback is used.
"""

import logging
import os

from . import _fallback

log = logging.getLogger(__name__)

_core = None
if os.environ.get("D2DCACHE_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _core
    except ImportError:  # extension not built
        log.debug("compiled kernels unavailable, using numpy fallback")

BACKEND = "cython" if _core is not None else "python"
_impl = _core if _core is not None else _fallback

sample_blocks = _impl.sample_blocks
greedy_scan = _impl.greedy_scan
exhaustive = _impl.exhaustive


def get_backend(name):
    """Kernel module by name (``"cython"`` or ``"python"``), for benchmarks."""
    if name == "python":
        return _fallback
    if name == "cython":
        if _core is None:
            raise ImportError("compiled kernels are not built")
        return _core
    raise ValueError(f"unknown backend {name!r}")
