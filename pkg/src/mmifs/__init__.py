"""Multi-objective interaction-aware feature selection (MMI-FS)."""

from .archive import AddOutcome, Archive, ArchiveEntry
from .dataset import Dataset, SplitPair, load_csv, min_max_normalize, project, stratified_split
from .evaluator import Dominance, Evaluator, FeatureSubset, Objectives, dominates, knn_error
from .metrics import c_metric, friedman, hypervolume, wilcoxon_exact
from .optimizer import (OptimizerConfig, RunRecord, run, run_blind_paes, run_mmifs,
                        run_random_search)
from .probability_model import ModelParams, ProbabilityModel, init_uniform

__version__ = "0.1.0"

__all__ = [
    "AddOutcome", "Archive", "ArchiveEntry", "Dataset", "Dominance", "Evaluator",
    "FeatureSubset", "ModelParams", "Objectives", "OptimizerConfig", "ProbabilityModel",
    "RunRecord", "SplitPair", "c_metric", "dominates", "friedman", "hypervolume",
    "init_uniform", "knn_error", "load_csv", "min_max_normalize", "project", "run",
    "run_blind_paes", "run_mmifs", "run_random_search", "stratified_split", "wilcoxon_exact",
]
