"""Cyclic block coordinate descent: P-CCD, VR-CCD and full-vector baselines."""

from ._core import (  # noqa: F401
    BlockPartition,
    ConfigError,
    Error,
    NonFiniteError,
    Objective,
    QuadraticFiniteSum,
    Regularizer,
    RunResult,
    SigmoidClassification,
    L_constants,
    block_metric,
    generate_classification,
    generate_quadratic,
    pccd,
    run_config,
    run_suite,
    spectral_norm,
    step_size,
    suite_names,
    sweep,
    vrccd,
)

__version__ = "0.1.0"
