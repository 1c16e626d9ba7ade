"""Differentially private learning on class-imbalanced binary data."""

from .dp_core import PrivacyBudget, PrivacyError
from .evaluation import ExperimentConfig, MetricsReport, compute_metrics, run_experiment
from .models import LinearModel, train_dpsgd, train_erm_objective_perturbation, train_logreg_baseline
from .pipeline import MethodSpec, fit_pipeline
from .preprocess import Dataset

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "ExperimentConfig",
    "LinearModel",
    "MethodSpec",
    "MetricsReport",
    "PrivacyBudget",
    "PrivacyError",
    "compute_metrics",
    "fit_pipeline",
    "run_experiment",
    "train_dpsgd",
    "train_erm_objective_perturbation",
    "train_logreg_baseline",
]
