"""Leaf-wise regression tree growth over binned features.

Split search scans histogram bins with the variance-reduction gain
G_L^2/n_L + G_R^2/n_R - G^2/n; the best leaf (by gain) is expanded first
until the leaf budget, depth limit, or gain floor stops growth. Sibling
histograms are derived by subtraction from the parent, so only the smaller
child is accumulated directly.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from ..prng import SplitMix64
from .binning import BinMap
from .histogram import Histogram, build_histogram, subtract_histogram

# Relative floor below which a gain is considered zero (guards against
# accumulation noise manufacturing splits on constant residuals).
GAIN_EPS_REL = 1e-12


@dataclass(frozen=True)
class SplitDecision:
    feature: int
    bin: int
    gain: float
    n_left: int
    n_right: int


@dataclass
class TreeNode:
    """Leaf when ``feature`` is -1, else an internal split node."""

    value: float = 0.0
    feature: int = -1
    bin_threshold: int = -1
    raw_threshold: float = math.nan
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None

    @property
    def is_leaf(self) -> bool:
        return self.feature < 0


@dataclass
class Tree:
    root: TreeNode
    n_leaves: int
    depth: int

    def apply_binned(self, binned: np.ndarray) -> np.ndarray:
        """Training-time application on bin indices (matches growth exactly)."""
        out = np.empty(binned.shape[0], dtype=np.float64)
        stack = [(self.root, np.arange(binned.shape[0], dtype=np.intp))]
        while stack:
            node, idx = stack.pop()
            if node.is_leaf:
                out[idx] = node.value
            else:
                mask = binned[idx, node.feature] <= node.bin_threshold
                stack.append((node.left, idx[mask]))
                stack.append((node.right, idx[~mask]))
        return out

    def predict_raw(self, x: np.ndarray) -> np.ndarray:
        """Inference on raw feature values; left branch when x < raw_threshold."""
        out = np.empty(x.shape[0], dtype=np.float64)
        stack = [(self.root, np.arange(x.shape[0], dtype=np.intp))]
        while stack:
            node, idx = stack.pop()
            if node.is_leaf:
                out[idx] = node.value
            else:
                mask = x[idx, node.feature] < node.raw_threshold
                stack.append((node.left, idx[mask]))
                stack.append((node.right, idx[~mask]))
        return out

    def iter_nodes_preorder(self):
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            if not node.is_leaf:
                stack.append(node.right)
                stack.append(node.left)


def best_split(
    histograms: dict[int, Histogram],
    n_node: int,
    grad_total: float,
    min_child_samples: int,
) -> SplitDecision | None:
    """Best (feature, bin) split by gain; ties go to the lowest feature then
    the lowest bin; None when no split clears the gain floor."""
    if n_node < 2 * min_child_samples:
        return None
    parent_score = (grad_total * grad_total) / n_node
    floor = GAIN_EPS_REL * max(1.0, abs(parent_score))
    best: SplitDecision | None = None
    for feature in sorted(histograms):
        hist = histograms[feature]
        cum_n = np.cumsum(hist.counts)
        cum_g = np.cumsum(hist.grad_sums)
        for b in range(hist.n_bins - 1):
            n_left = int(cum_n[b])
            n_right = n_node - n_left
            if n_left < min_child_samples or n_right < min_child_samples:
                continue
            g_left = float(cum_g[b])
            g_right = grad_total - g_left
            gain = (
                g_left * g_left / n_left
                + g_right * g_right / n_right
                - parent_score
            )
            if gain > floor and (best is None or gain > best.gain):
                best = SplitDecision(
                    feature=feature, bin=b, gain=gain,
                    n_left=n_left, n_right=n_right,
                )
    return best


@dataclass
class _NodeCtx:
    node: TreeNode
    rows: np.ndarray
    depth: int
    hists: dict[int, Histogram] = field(default_factory=dict)
    split: SplitDecision | None = None


def grow_tree(
    binned: np.ndarray,
    residuals: np.ndarray,
    params,
    rng: SplitMix64,
    binmap: BinMap,
) -> Tree:
    """Grow one tree on the residuals; leaf values are mean residuals
    (optionally shrunk by the L2 knob)."""
    n, n_features = binned.shape

    feats = list(range(n_features))
    rng.shuffle(feats)
    k_f = max(1, math.ceil(params.colsample_bytree * n_features))
    allowed = sorted(feats[:k_f])

    if params.subsample < 1.0:
        k_r = max(1, int(params.subsample * n + 0.5))
        order = list(range(n))
        rng.shuffle(order)
        rows = np.array(sorted(order[:k_r]), dtype=np.intp)
    else:
        rows = np.arange(n, dtype=np.intp)

    l2 = params.leaf_shrinkage_l2

    def leaf_value(row_idx: np.ndarray) -> float:
        return float(residuals[row_idx].sum()) / (len(row_idx) + l2)

    def make_ctx(row_idx: np.ndarray, depth: int) -> _NodeCtx:
        return _NodeCtx(
            node=TreeNode(value=leaf_value(row_idx)), rows=row_idx, depth=depth
        )

    def compute_hists(ctx: _NodeCtx) -> None:
        ctx.hists = {
            f: build_histogram(binned[:, f], residuals, ctx.rows, binmap.n_bins(f))
            for f in allowed
        }

    def try_split(ctx: _NodeCtx) -> bool:
        if ctx.depth >= params.max_depth:
            return False
        if len(ctx.rows) < 2 * params.min_child_samples:
            return False
        grad_total = float(residuals[ctx.rows].sum())
        ctx.split = best_split(
            ctx.hists, len(ctx.rows), grad_total, params.min_child_samples
        )
        return ctx.split is not None

    root = make_ctx(rows, depth=0)
    compute_hists(root)
    heap: list[tuple[float, int, _NodeCtx]] = []
    push_seq = 0
    if try_split(root):
        heapq.heappush(heap, (-root.split.gain, push_seq, root))
        push_seq += 1

    n_leaves = 1
    max_depth_seen = 0
    while heap and n_leaves < params.num_leaves:
        _, _, ctx = heapq.heappop(heap)
        dec = ctx.split
        f, b = dec.feature, dec.bin
        mask = binned[ctx.rows, f] <= b
        left_rows = ctx.rows[mask]
        right_rows = ctx.rows[~mask]

        node = ctx.node
        node.feature = f
        node.bin_threshold = b
        node.raw_threshold = float(binmap.cuts[f][b])

        left_ctx = make_ctx(left_rows, ctx.depth + 1)
        right_ctx = make_ctx(right_rows, ctx.depth + 1)
        node.left = left_ctx.node
        node.right = right_ctx.node
        n_leaves += 1
        max_depth_seen = max(max_depth_seen, ctx.depth + 1)

        # Accumulate the smaller child; derive the sibling by subtraction.
        if len(left_rows) <= len(right_rows):
            small, large = left_ctx, right_ctx
        else:
            small, large = right_ctx, left_ctx
        compute_hists(small)
        large.hists = {
            f2: subtract_histogram(ctx.hists[f2], small.hists[f2]) for f2 in allowed
        }
        ctx.hists = {}

        for child in (left_ctx, right_ctx):
            if try_split(child):
                heapq.heappush(heap, (-child.split.gain, push_seq, child))
                push_seq += 1

    return Tree(root=root.node, n_leaves=n_leaves, depth=max_depth_seen)
