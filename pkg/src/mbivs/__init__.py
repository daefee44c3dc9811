"""Multivariate Bayesian indicator variable selection.

Sparse multi-response regression with a three-level inclusion hierarchy
(group, predictor, response), fit by Gibbs sampling. Companion pieces: a
closed-form single-entry oracle, BFDR selection with per-predictor best
response subsets, joint-distribution sampler validation, and a simulation
benchmark harness. The ``mbivs`` console script exposes all of it.
"""

from .errors import (
    BadAnnotation,
    BadGroupIndex,
    DatasetValidationError,
    DimensionMismatch,
    MbivsError,
    NonFiniteValue,
    NotPositiveDefinite,
    NumericalBreakdown,
    ValidationError,
)
from .gibbs import GibbsKernel, SamplerConfig, run_chain, run_chains
from .inference import (
    BestSubsetResult,
    InferenceReport,
    best_subsets,
    bfdr_select,
    build_report,
    entry_pip,
    posterior_median_matrix,
    predictor_pip,
    subset_pip,
)
from .model import (
    AnnotationPriorConfig,
    ChainState,
    GroupedDesign,
    PosteriorSamples,
    PriorConfig,
    ResponseMatrix,
    SampleMeta,
    assemble_coefficients,
    concat_samples,
    validate_dataset,
)
from .oracle import (
    inclusion_log_odds,
    inclusion_probability,
    numeric_median,
    shrinkage_factor,
    threshold_estimate,
)
from .rng import RngStream, substream
from .simdata import ScenarioSpec, SimulatedData, scenario_spec, simulate_scenario

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "AnnotationPriorConfig",
    "BadAnnotation",
    "BadGroupIndex",
    "BestSubsetResult",
    "ChainState",
    "DatasetValidationError",
    "DimensionMismatch",
    "GibbsKernel",
    "GroupedDesign",
    "InferenceReport",
    "MbivsError",
    "NonFiniteValue",
    "NotPositiveDefinite",
    "NumericalBreakdown",
    "PosteriorSamples",
    "PriorConfig",
    "ResponseMatrix",
    "RngStream",
    "SampleMeta",
    "SamplerConfig",
    "ScenarioSpec",
    "SimulatedData",
    "ValidationError",
    "assemble_coefficients",
    "best_subsets",
    "bfdr_select",
    "build_report",
    "concat_samples",
    "entry_pip",
    "inclusion_log_odds",
    "inclusion_probability",
    "numeric_median",
    "posterior_median_matrix",
    "predictor_pip",
    "run_chain",
    "run_chains",
    "scenario_spec",
    "shrinkage_factor",
    "simulate_scenario",
    "subset_pip",
    "substream",
    "threshold_estimate",
    "validate_dataset",
]
