"""Per-node, per-feature histograms of sample counts and residual sums."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import _kernels
from ..errors import InternalError


@dataclass
class Histogram:
    counts: np.ndarray  # int64 per bin
    grad_sums: np.ndarray  # float64 per bin

    @property
    def n_bins(self) -> int:
        return len(self.counts)

    @property
    def total_count(self) -> int:
        return int(self.counts.sum())

    @property
    def total_grad(self) -> float:
        return float(self.grad_sums.sum())


def build_histogram(
    binned_col: np.ndarray, residuals: np.ndarray, rows: np.ndarray, n_bins: int
) -> Histogram:
    """Accumulate counts and residual sums over ``rows`` (ascending order)."""
    counts, sums = _kernels.hist_build(
        np.ascontiguousarray(binned_col[rows], dtype=np.uint8),
        np.ascontiguousarray(residuals[rows], dtype=np.float64),
        n_bins,
    )
    return Histogram(counts=counts, grad_sums=sums)


def subtract_histogram(parent: Histogram, child: Histogram) -> Histogram:
    """Sibling histogram as parent minus child; counts must stay non-negative."""
    counts = parent.counts - child.counts
    if (counts < 0).any():
        raise InternalError("histogram subtraction produced a negative count")
    return Histogram(counts=counts, grad_sums=parent.grad_sums - child.grad_sums)
