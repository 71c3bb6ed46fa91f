"""Histogram-based gradient-boosted regression trees."""

from .binning import BinMap, build_bins
from .grower import SplitDecision, Tree, TreeNode, best_split, grow_tree
from .histogram import Histogram, build_histogram, subtract_histogram
from .model import (
    FORMAT_VERSION,
    GbdtModel,
    GbdtParams,
    adaboost_weight,
    load_model,
    params_from_file,
    params_from_mapping,
    params_to_file,
    predict,
    predict_pages,
    rmse,
    save_model,
    train,
)

__all__ = [
    "BinMap",
    "build_bins",
    "SplitDecision",
    "Tree",
    "TreeNode",
    "best_split",
    "grow_tree",
    "Histogram",
    "build_histogram",
    "subtract_histogram",
    "FORMAT_VERSION",
    "GbdtModel",
    "GbdtParams",
    "adaboost_weight",
    "load_model",
    "params_from_file",
    "params_from_mapping",
    "params_to_file",
    "predict",
    "predict_pages",
    "rmse",
    "save_model",
    "train",
]
