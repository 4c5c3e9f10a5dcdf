"""Double-descent experiments on random-feature models and small MLPs."""

__version__ = "0.1.0"

from .config import SweepConfig, load_config, parse_config
from .data import Dataset, load_mnist_idx, subsample_and_split, synth_gaussian_classes
from .features import FeatureMap, make_feature_map, transform
from .records import CurvePoint, read_points, write_points
from .solver import RidgeProblem, SolveResult, anchored_ridge_solve, evaluate, min_norm_solve, sample_anchor
from .sweep import run_feature_sweep, run_nn_sweep, run_sweep, summarize

__all__ = [
    "CurvePoint", "Dataset", "FeatureMap", "RidgeProblem", "SolveResult", "SweepConfig",
    "anchored_ridge_solve", "evaluate", "load_config", "load_mnist_idx", "make_feature_map",
    "min_norm_solve", "parse_config", "read_points", "run_feature_sweep", "run_nn_sweep",
    "run_sweep", "sample_anchor", "subsample_and_split", "summarize", "synth_gaussian_classes",
    "transform", "write_points",
]
