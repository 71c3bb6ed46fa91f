"""wsskit: working-set-size estimation toolkit.

Page-fault records come from a kernel probe (or a deterministic paging
simulator emitting identical records); interval features and referenced-flag
labels feed a histogram-based gradient-boosted regressor that estimates the
working set size.
"""

from ._kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
