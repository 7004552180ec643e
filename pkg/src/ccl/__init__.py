"""Cyclical curriculum learning with loss-based probabilistic sample selection."""

__version__ = "0.1.0"

from .schedule import ScheduleParams, constant_sizes, cyclical_sizes, monotonic_sizes  # noqa: E402
from .selection import (  # noqa: E402
    inclusion_probabilities_bruteforce,
    losses_to_scores,
    sample_without_replacement,
    subset_size,
)
from .datasets import Dataset, gen_blobs, gen_two_spirals, load_csv, load_idx, split  # noqa: E402
from .trainer import (  # noqa: E402
    METHODS,
    ComparisonReport,
    RunResult,
    TrainConfig,
    run_experiment,
    train_ccl,
    train_scoring_model,
    train_vanilla,
)
from .estimator import CyclicalCurriculumClassifier  # noqa: E402

__all__ = [
    "ScheduleParams", "cyclical_sizes", "constant_sizes", "monotonic_sizes",
    "losses_to_scores", "subset_size", "sample_without_replacement",
    "inclusion_probabilities_bruteforce",
    "Dataset", "gen_blobs", "gen_two_spirals", "load_csv", "load_idx", "split",
    "METHODS", "TrainConfig", "RunResult", "ComparisonReport", "train_scoring_model",
    "train_ccl", "train_vanilla", "run_experiment", "CyclicalCurriculumClassifier",
]
