"""Nested Kriging: aggregation of Gaussian process submodels."""

from ._nestkrig import (
    AggregatedProcess,
    ErrorAnalysis,
    FullModel,
    KernelSpec,
    NestkrigError,
    SubmodelBank,
    aggregate,
    c_agg,
    exact_mse,
    fit_full,
    k_agg,
    kernel_matrix,
    make_partition,
    nested_predict,
    run_cli,
    run_consistency,
    run_nonconsistency,
    sample_paths,
)

__all__ = [
    "AggregatedProcess",
    "ErrorAnalysis",
    "FullModel",
    "KernelSpec",
    "NestkrigError",
    "SubmodelBank",
    "aggregate",
    "c_agg",
    "exact_mse",
    "fit_full",
    "k_agg",
    "kernel_matrix",
    "make_partition",
    "nested_predict",
    "run_cli",
    "run_consistency",
    "run_nonconsistency",
    "sample_paths",
]
