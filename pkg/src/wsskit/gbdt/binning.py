"""Feature discretization: equal-frequency cut points, at most max_bins bins.

Cut points sit midway between adjacent distinct values, so binning depends
only on value order around the cuts. A value x falls in the first bin whose
cut exceeds it (``bisect_right`` semantics): bin(x) <= b exactly when
x < cuts[b], which is also the rule inference applies to raw thresholds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError


@dataclass(frozen=True)
class BinMap:
    """Per-feature ascending cut points."""

    cuts: tuple[np.ndarray, ...]

    @property
    def n_features(self) -> int:
        return len(self.cuts)

    def n_bins(self, feature: int) -> int:
        return len(self.cuts[feature]) + 1

    def transform(self, x: np.ndarray) -> np.ndarray:
        """Map raw features (n, F) to bin indices (n, F) uint8."""
        x = np.asarray(x, dtype=np.float64)
        out = np.empty(x.shape, dtype=np.uint8)
        for f in range(self.n_features):
            out[:, f] = np.searchsorted(self.cuts[f], x[:, f], side="right")
        return out


def _column_cuts(col: np.ndarray, max_bins: int) -> np.ndarray:
    n = col.size
    finite = col[np.isfinite(col)]
    if finite.size == 0:
        raise DataError("feature has no finite values")
    ordered = np.sort(finite)
    distinct = np.unique(ordered)
    if distinct.size <= max_bins:
        return (distinct[:-1] + distinct[1:]) / 2.0
    cuts = []
    for k in range(1, max_bins):
        v = ordered[(k * n) // max_bins]
        # boundary midway between v and the next distinct value above it
        idx = np.searchsorted(distinct, v)
        if idx + 1 >= distinct.size:
            continue
        cuts.append((distinct[idx] + distinct[idx + 1]) / 2.0)
    return np.unique(np.asarray(cuts, dtype=np.float64))


def build_bins(x: np.ndarray, max_bins: int) -> BinMap:
    """Quantile-style cuts for every feature column of x (n, F)."""
    if not (2 <= max_bins <= 255):
        raise DataError(f"max_bins must be in [2, 255], got {max_bins}")
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] == 0:
        raise DataError("expected a non-empty (n, F) feature matrix")
    return BinMap(cuts=tuple(_column_cuts(x[:, f], max_bins) for f in range(x.shape[1])))
