"""Datasets, training, evaluation, sweeps, grid search and heat maps."""

from fibernlc.harness.config import DESK_TRAIN, GridSpec, TrainConfig
from fibernlc.harness.dataset import Dataset, build_dataset, distortion_targets, split, training_split
from fibernlc.harness.evaluation import EvalResult, equalize, estimate_x, evaluate, linear_q
from fibernlc.harness.grid import grid_search, pareto_envelope
from fibernlc.harness.heatmap import band_fraction, export_heatmaps, score_maps
from fibernlc.harness.sweep import SweepPoint, power_sweep
from fibernlc.harness.training import TrainResult, dataset_loss, train

__all__ = [
    "TrainConfig", "DESK_TRAIN", "GridSpec", "Dataset", "build_dataset", "distortion_targets",
    "split", "training_split", "EvalResult", "equalize", "estimate_x", "evaluate", "linear_q",
    "grid_search", "pareto_envelope", "band_fraction", "export_heatmaps", "score_maps",
    "SweepPoint", "power_sweep", "TrainResult", "dataset_loss", "train",
]
