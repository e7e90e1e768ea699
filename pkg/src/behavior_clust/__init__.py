"""Behavior-aware clustering of multi-behavior trajectory datasets."""

__version__ = "0.1.0"

from .dataset import Dataset, Trajectory, load_jsonl, save_jsonl, synthesize
from .errors import DataError, DegenerateInputError, TrainingDivergedError
from .pipeline import ClusterAssignment, PipelineConfig, cluster

__all__ = [
    "ClusterAssignment",
    "DataError",
    "Dataset",
    "DegenerateInputError",
    "PipelineConfig",
    "TrainingDivergedError",
    "Trajectory",
    "cluster",
    "load_jsonl",
    "save_jsonl",
    "synthesize",
    "__version__",
]
