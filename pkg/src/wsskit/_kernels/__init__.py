"""Kernel backend selection.

The hot loops (LRU paging replay, sliding-window distinct counts, histogram
accumulation) exist twice: a Cython extension (``_core``) and a pure-Python
fallback (``pyfallback``). The compiled backend is preferred when built;
``WSSKIT_BACKEND=python`` in the environment forces the fallback. Both
backends produce bit-identical results.
"""

import os

if os.environ.get("WSSKIT_BACKEND", "").lower() in ("py", "python", "pure"):
    from . import pyfallback as _impl
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]
    except ImportError:
        from . import pyfallback as _impl

BACKEND = _impl.BACKEND

lru_sim_flush = _impl.lru_sim_flush
window_distinct = _impl.window_distinct
hist_build = _impl.hist_build


def backend_name() -> str:
    return BACKEND
