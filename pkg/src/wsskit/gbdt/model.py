"""Gradient-boosted ensemble: training loop, prediction, metrics, and the
versioned text model format.

Prediction is base_score + learning_rate * sum of tree outputs; each tree is
fit to the residuals of the running prediction, so the ensemble is the usual
least-squares boosting H(x) with a constant per-tree weight. The adaptive
classification weight alpha(eps) = ln((1-eps)/eps)/2 is provided as a
standalone utility for error-weight analysis; regression training does not
use it.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from ..errors import CorruptModelError, DataError, ModelVersionError
from ..features import Dataset, NormalizationParams
from ..prng import SplitMix64
from .binning import build_bins
from .grower import Tree, TreeNode, grow_tree

FORMAT_VERSION = 1
_MAGIC = "wsskit-model"


@dataclass(frozen=True)
class GbdtParams:
    learning_rate: float = 0.04
    max_depth: int = 5
    num_leaves: int = 255
    n_estimators: int = 200
    min_child_samples: int = 3
    colsample_bytree: float = 0.999
    subsample: float = 0.57
    random_state: int = 0
    max_bins: int = 255
    leaf_shrinkage_l2: float = 0.0

    def validate(self) -> None:
        if not self.learning_rate > 0:
            raise DataError("learning_rate must be > 0")
        if self.max_depth < 1:
            raise DataError("max_depth must be >= 1")
        if self.num_leaves < 2:
            raise DataError("num_leaves must be >= 2")
        if self.n_estimators < 1:
            raise DataError("n_estimators must be >= 1")
        if self.min_child_samples < 1:
            raise DataError("min_child_samples must be >= 1")
        if not (0 < self.colsample_bytree <= 1):
            raise DataError("colsample_bytree must be in (0, 1]")
        if not (0 < self.subsample <= 1):
            raise DataError("subsample must be in (0, 1]")
        if not (2 <= self.max_bins <= 255):
            raise DataError("max_bins must be in [2, 255]")
        if self.leaf_shrinkage_l2 < 0:
            raise DataError("leaf_shrinkage_l2 must be >= 0")


_INT_PARAMS = {
    "max_depth", "num_leaves", "n_estimators", "min_child_samples",
    "random_state", "max_bins",
}


def params_from_mapping(kv: dict) -> GbdtParams:
    fields = {}
    for key, value in kv.items():
        if key in _INT_PARAMS:
            fields[key] = int(value)
        else:
            fields[key] = float(value)
    return GbdtParams(**fields)


@dataclass
class TrainHistory:
    train_rmse: list[float] = field(default_factory=list)
    valid_rmse: list[float] = field(default_factory=list)


@dataclass
class GbdtModel:
    params: GbdtParams
    scaler: NormalizationParams | None
    base_score: float
    trees: list[Tree]
    metadata: dict = field(default_factory=dict)
    history: TrainHistory | None = None


def rmse(predictions, labels) -> float:
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.shape != labels.shape:
        raise DataError(
            f"length mismatch: {predictions.shape} vs {labels.shape}"
        )
    if predictions.size == 0:
        raise DataError("rmse needs at least one pair")
    diff = predictions - labels
    return float(np.sqrt(np.mean(diff * diff)))


def adaboost_weight(epsilon: float) -> float:
    """Classification boosting weight alpha = ln((1-eps)/eps) / 2.

    Inputs outside (0, 1) are clamped to [1e-12, 1-1e-12] with a warning.
    """
    clamped = min(max(epsilon, 1e-12), 1.0 - 1e-12)
    if clamped != epsilon:
        warnings.warn(
            f"epsilon {epsilon} outside (0, 1); clamped to {clamped}",
            RuntimeWarning,
            stacklevel=2,
        )
    return 0.5 * math.log((1.0 - clamped) / clamped)


def _extract_xy(dataset, require_label=True):
    if isinstance(dataset, Dataset):
        x, y = dataset.to_arrays()
    else:
        x, y = dataset
        x = np.asarray(x, dtype=np.float64)
        y = None if y is None else np.asarray(y, dtype=np.float64)
    if x.shape[0] == 0:
        raise DataError("empty dataset")
    if require_label and y is None:
        raise DataError("dataset has no labels")
    bad = np.where(~np.isfinite(x))[0]
    if bad.size:
        raise DataError(f"non-finite feature in row {int(bad[0])}")
    if y is not None:
        bad = np.where(~np.isfinite(y))[0]
        if bad.size:
            raise DataError(f"non-finite label in row {int(bad[0])}")
    return x, y


def train(
    train_set,
    valid_set=None,
    params: GbdtParams | None = None,
    scaler: NormalizationParams | None = None,
) -> GbdtModel:
    """Fit the boosted ensemble on a (scaled) training set.

    ``train_set``/``valid_set`` are Datasets or (X, y) pairs. The fitted
    scaler, when given, is embedded in the model so inference can map raw
    features and invert predicted labels with training-time bounds.
    """
    params = params or GbdtParams()
    params.validate()
    x, y = _extract_xy(train_set)
    valid_x = valid_y = None
    if valid_set is not None:
        valid_x, valid_y = _extract_xy(valid_set)

    binmap = build_bins(x, params.max_bins)
    binned = binmap.transform(x)
    base = float(np.mean(y))
    pred = np.full(len(y), base, dtype=np.float64)
    valid_pred = None
    if valid_y is not None:
        valid_pred = np.full(len(valid_y), base, dtype=np.float64)

    rng = SplitMix64(params.random_state)
    trees: list[Tree] = []
    history = TrainHistory()
    for _ in range(params.n_estimators):
        residuals = y - pred
        tree = grow_tree(binned, residuals, params, rng, binmap)
        trees.append(tree)
        pred += params.learning_rate * tree.apply_binned(binned)
        history.train_rmse.append(rmse(pred, y))
        if valid_pred is not None:
            valid_pred += params.learning_rate * tree.predict_raw(valid_x)
            history.valid_rmse.append(rmse(valid_pred, valid_y))

    metadata = {
        "train_rmse": history.train_rmse[-1],
        "valid_rmse": history.valid_rmse[-1] if history.valid_rmse else None,
        "seed": params.random_state,
        "format_version": FORMAT_VERSION,
    }
    return GbdtModel(
        params=params,
        scaler=scaler,
        base_score=base,
        trees=trees,
        metadata=metadata,
        history=history,
    )


def predict(model: GbdtModel, x) -> np.ndarray:
    """Ensemble output on (n, F) feature rows (model's input scale)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != 2:
        raise DataError(f"expected (n, 2) features, got {x.shape}")
    out = np.full(x.shape[0], model.base_score, dtype=np.float64)
    for tree in model.trees:
        out += model.params.learning_rate * tree.predict_raw(x)
    return out


def predict_pages(model: GbdtModel, x) -> np.ndarray:
    """Predictions inverted to label units (pages) via the embedded scaler."""
    values = predict(model, x)
    if model.scaler is None:
        return values
    return np.asarray(model.scaler.unscale("wss_pages", values))


# ---------------------------------------------------------------- serialization


def _serialize_tree(tree: Tree) -> list[str]:
    nodes: list[TreeNode] = list(tree.iter_nodes_preorder())
    index = {id(node): i for i, node in enumerate(nodes)}
    lines = []
    for node in nodes:
        if node.is_leaf:
            lines.append(f"L {node.value!r}")
        else:
            lines.append(
                f"N {node.feature} {node.raw_threshold!r} "
                f"{index[id(node.left)]} {index[id(node.right)]}"
            )
    return lines


def _parse_tree(lines: list[str]) -> Tree:
    nodes: list[TreeNode] = []
    links: list[tuple[int, int, int]] = []
    for line in lines:
        parts = line.split()
        if parts[0] == "L" and len(parts) == 2:
            nodes.append(TreeNode(value=float(parts[1])))
        elif parts[0] == "N" and len(parts) == 5:
            node = TreeNode(
                feature=int(parts[1]), raw_threshold=float(parts[2])
            )
            links.append((len(nodes), int(parts[3]), int(parts[4])))
            nodes.append(node)
        else:
            raise CorruptModelError(f"bad tree node line: {line!r}")
    if not nodes:
        raise CorruptModelError("empty tree section")
    n_leaves = 0
    depth_limit = len(nodes)
    for i, left, right in links:
        if not (0 <= left < len(nodes)) or not (0 <= right < len(nodes)):
            raise CorruptModelError("tree child index out of range")
        nodes[i].left = nodes[left]
        nodes[i].right = nodes[right]
    # depth and leaf count by walking from the root
    depth = 0
    stack = [(nodes[0], 0)]
    seen = 0
    while stack:
        node, d = stack.pop()
        seen += 1
        if seen > depth_limit:
            raise CorruptModelError("tree node graph is not a tree")
        if node.is_leaf:
            n_leaves += 1
            depth = max(depth, d)
        else:
            if node.left is None or node.right is None:
                raise CorruptModelError("internal node missing children")
            stack.append((node.left, d + 1))
            stack.append((node.right, d + 1))
    return Tree(root=nodes[0], n_leaves=n_leaves, depth=depth)


def save_model(model: GbdtModel, path) -> None:
    lines = [f"{_MAGIC} format_version={FORMAT_VERSION}"]
    lines.append("[meta]")
    lines.append(f"base_score={model.base_score!r}")
    lines.append(f"trees={len(model.trees)}")
    for key in ("train_rmse", "valid_rmse", "seed"):
        value = model.metadata.get(key)
        if value is not None:
            lines.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    lines.append("[params]")
    for key, value in asdict(model.params).items():
        lines.append(f"{key}={value!r}" if isinstance(value, float) else f"{key}={value}")
    lines.append("[scaler]")
    if model.scaler is None:
        lines.append("none=true")
    else:
        lines.extend(model.scaler.to_lines())
    for i, tree in enumerate(model.trees):
        lines.append(f"[tree {i}]")
        lines.extend(_serialize_tree(tree))
    lines.append("[end]")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_model(path) -> GbdtModel:
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.read()
    lines = [ln for ln in raw.split("\n")]
    if not lines or not lines[0].startswith(_MAGIC):
        raise CorruptModelError(f"{path}: not a model file")
    header = lines[0].split()
    try:
        version = int(dict(p.split("=") for p in header[1:])["format_version"])
    except (KeyError, ValueError) as exc:
        raise CorruptModelError(f"{path}: malformed header") from exc
    if version != FORMAT_VERSION:
        raise ModelVersionError(
            f"{path}: format_version {version} unsupported (expected {FORMAT_VERSION})"
        )
    if "[end]" not in lines:
        raise CorruptModelError(f"{path}: missing end marker (truncated?)")

    sections: dict[str, list[str]] = {}
    order: list[str] = []
    current = None
    for line in lines[1:]:
        if line == "[end]":
            break
        if line.startswith("["):
            current = line.strip("[]")
            sections[current] = []
            order.append(current)
        elif line and current is not None:
            sections[current].append(line)

    def kv_of(name):
        out = {}
        for line in sections.get(name, []):
            key, eq, value = line.partition("=")
            if eq:
                out[key] = value
        return out

    meta = kv_of("meta")
    params_kv = kv_of("params")
    try:
        params = params_from_mapping(params_kv)
        base_score = float(meta["base_score"])
        n_trees = int(meta["trees"])
    except (KeyError, ValueError, TypeError) as exc:
        raise CorruptModelError(f"{path}: bad meta/params section: {exc}") from exc

    scaler_kv = kv_of("scaler")
    scaler = None
    if "none" not in scaler_kv:
        scaler = NormalizationParams.from_lines(sections.get("scaler", []))

    trees = []
    for name in order:
        if name.startswith("tree "):
            trees.append(_parse_tree(sections[name]))
    if len(trees) != n_trees:
        raise CorruptModelError(
            f"{path}: expected {n_trees} trees, found {len(trees)} (truncated?)"
        )
    metadata = {
        "train_rmse": float(meta["train_rmse"]) if "train_rmse" in meta else None,
        "valid_rmse": float(meta["valid_rmse"]) if "valid_rmse" in meta else None,
        "seed": int(meta["seed"]) if "seed" in meta else None,
        "format_version": version,
    }
    return GbdtModel(
        params=params,
        scaler=scaler,
        base_score=base_score,
        trees=trees,
        metadata=metadata,
    )


def params_to_file(params: GbdtParams, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in asdict(params).items():
            fh.write(f"{key}={value!r}\n" if isinstance(value, float) else f"{key}={value}\n")


def params_from_file(path) -> GbdtParams:
    kv = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            key, eq, value = line.strip().partition("=")
            if eq and key:
                kv[key] = value
    try:
        return params_from_mapping(kv)
    except (ValueError, TypeError) as exc:
        raise DataError(f"bad params file {path}: {exc}") from exc
