"""Anomaly detection and localisation on mixed binary/continuous streams.

A pairwise graphical model ties binary and continuous variables together;
each variable is monitored by a two-sided CUSUM of the log-likelihood ratio
of its conditional distribution given all the others, which localises a
change to the variables whose conditionals the changed parameter enters.
A rank-based retrospective scan is included as the batch baseline.
"""

from .detect import (
    AlarmEvent,
    AlternativePair,
    DetectionReport,
    DetectorBank,
    DetectorConfig,
    calibrate_threshold,
    cat_llr,
    cusum_step,
    quant_llr,
    run_detector,
    solve_alternative_means,
)
from .errors import (
    DimensionMismatchError,
    EnumerationCapError,
    InvalidModificationError,
    MissingTableError,
    ModelValidationError,
    NotPositiveDefiniteError,
    NotSymmetricError,
    ParseError,
    SeriesTooShortError,
)
from .experiment import (
    ExperimentConfig,
    ExperimentResult,
    StreamSummary,
    apply_modification,
    chain_model,
    detect_stream,
    run_experiment,
)
from .io import read_dataset, read_model, write_dataset, write_model
from .model import (
    ConditionalBernoulli,
    ConditionalGaussian,
    IsingMarginal,
    MixedModel,
    Observation,
    conditional_bernoulli,
    conditional_gaussian,
    gaussian_block_mean,
    ising_marginal,
    log_unnormalized_density,
)
from .monitor import CusumMonitor, PettittScanner
from .rankscan import RankScan, baseline_report, pettitt_scan, rank_scan, scan_threshold
from .sampling import (
    SamplerConfig,
    sample_categorical_exact,
    sample_categorical_gibbs,
    sample_gaussian_given_categorical,
    sample_joint,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # model
    "MixedModel",
    "Observation",
    "ConditionalGaussian",
    "ConditionalBernoulli",
    "IsingMarginal",
    "conditional_gaussian",
    "conditional_bernoulli",
    "log_unnormalized_density",
    "gaussian_block_mean",
    "ising_marginal",
    # sampling
    "SamplerConfig",
    "sample_categorical_exact",
    "sample_categorical_gibbs",
    "sample_gaussian_given_categorical",
    "sample_joint",
    # detection
    "DetectorConfig",
    "DetectorBank",
    "DetectionReport",
    "AlarmEvent",
    "AlternativePair",
    "quant_llr",
    "cat_llr",
    "cusum_step",
    "solve_alternative_means",
    "run_detector",
    "calibrate_threshold",
    # baseline
    "RankScan",
    "pettitt_scan",
    "rank_scan",
    "scan_threshold",
    "baseline_report",
    # estimators
    "CusumMonitor",
    "PettittScanner",
    # experiments and I/O
    "chain_model",
    "apply_modification",
    "ExperimentConfig",
    "ExperimentResult",
    "StreamSummary",
    "run_experiment",
    "detect_stream",
    "read_model",
    "write_model",
    "read_dataset",
    "write_dataset",
    # errors
    "ModelValidationError",
    "DimensionMismatchError",
    "NotSymmetricError",
    "NotPositiveDefiniteError",
    "InvalidModificationError",
    "EnumerationCapError",
    "MissingTableError",
    "SeriesTooShortError",
    "ParseError",
]
