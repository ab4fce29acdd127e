"""Credit scoring toolkit: PD models, boosted trees, evaluation, explanations."""

from .dataset import (
    Dataset,
    DatasetSummary,
    SplitSpec,
    SyntheticSpec,
    generate_synthetic,
    generate_synthetic_with_truth,
    load_csv,
    split,
    summarize,
    write_csv,
)
from .explain import (
    Explanation,
    FeatureStats,
    LimeConfig,
    StabilityReport,
    explain,
    sample_neighborhood,
    stability,
    weakness_probe,
)
from .gbm import BoostedEnsemble, GbmConfig, fit_gbm, staged_deviance
from .linear import FitConfig, GlmModel, RidgeModel, fit_glm, fit_ridge, odds_ratios
from .metrics import EvalReport, evaluate, gini_delta, r_squared

__version__ = "0.1.0"

__all__ = [
    "BoostedEnsemble",
    "Dataset",
    "DatasetSummary",
    "EvalReport",
    "Explanation",
    "FeatureStats",
    "FitConfig",
    "GbmConfig",
    "GlmModel",
    "LimeConfig",
    "RidgeModel",
    "SplitSpec",
    "StabilityReport",
    "SyntheticSpec",
    "evaluate",
    "explain",
    "fit_gbm",
    "fit_glm",
    "fit_ridge",
    "generate_synthetic",
    "generate_synthetic_with_truth",
    "gini_delta",
    "load_csv",
    "odds_ratios",
    "r_squared",
    "sample_neighborhood",
    "split",
    "stability",
    "staged_deviance",
    "summarize",
    "weakness_probe",
    "write_csv",
]
