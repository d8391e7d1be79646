"""Windowed time-aggregation forecasting toolkit.

Thin python facade over the C++ core: synthetic cohort generation, the
windowing pipeline, the six time-aggregation architectures, TPE tuning,
auROC/DeLong metrics, permutation importance and t-SNE embeddings.
"""

from timeagg._core import (
    Cohort,
    DataError,
    Model,
    NumericError,
    Prepared,
    architectures,
    auroc,
    delong_ci,
    generate_cohort,
    make_benchmark_pair,
    permutation_importance,
    prepare,
    relative_difference,
    train,
    tsne,
    tune,
)

__all__ = [
    "Cohort",
    "DataError",
    "Model",
    "NumericError",
    "Prepared",
    "architectures",
    "auroc",
    "delong_ci",
    "generate_cohort",
    "make_benchmark_pair",
    "permutation_importance",
    "prepare",
    "relative_difference",
    "train",
    "tsne",
    "tune",
]
