"""From-scratch seven-layer CNN for small grayscale face datasets, with
hand-written backpropagation and data-parallel batch training."""

from .backprop import GradientSet, accumulate, backward, output_deltas
from .checkpoint import load_checkpoint, save_checkpoint
from .dataio import TrainingSample, generate_synthetic, load_dataset, load_pgm, preprocess
from .estimator import CNNClassifier, FacePreprocessor
from .exceptions import ConfigurationError
from .network import (
    DEFAULT_SPEC,
    REDUCED_SPEC,
    ArchitectureSpec,
    NetworkParams,
    build,
    count_parameters,
    forward_full,
)
from .parallel import SpeedupReport, benchmark, parallel_epoch, predict_times
from .trainer import TrainConfig, train_epoch, train_phase1, train_phase2

__all__ = [
    "ArchitectureSpec",
    "CNNClassifier",
    "ConfigurationError",
    "DEFAULT_SPEC",
    "FacePreprocessor",
    "GradientSet",
    "NetworkParams",
    "REDUCED_SPEC",
    "SpeedupReport",
    "TrainConfig",
    "TrainingSample",
    "accumulate",
    "backward",
    "benchmark",
    "build",
    "count_parameters",
    "forward_full",
    "generate_synthetic",
    "load_checkpoint",
    "load_dataset",
    "load_pgm",
    "output_deltas",
    "parallel_epoch",
    "predict_times",
    "preprocess",
    "save_checkpoint",
    "train_epoch",
    "train_phase1",
    "train_phase2",
]
