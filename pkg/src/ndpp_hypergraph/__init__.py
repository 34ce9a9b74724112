"""Nonsymmetric determinantal hypergraph models.

A hyperedge over ``n`` nodes is scored by the principal minor of a
nonsymmetric kernel built from per-node popularity weights, unit-norm
latent directions, and a skew coupling that lets co-occurrence be
directional.  The package covers exact probabilities, exact sampling,
penalized-free maximum-likelihood fitting, symmetry-aware parameter
recovery metrics, synthetic benchmarks, dataset ingestion, and a
hyperedge-prediction harness.
"""

__version__ = "0.1.0"

from .alignment import (
    AlignedErrors,
    AlignmentResult,
    ProbabilityErrors,
    align_latent,
    aligned_errors,
    apply_symmetry,
    kernel_error,
    probability_errors,
)
from .data_io import (
    DatasetSummary,
    HypergraphDataset,
    SplitSpec,
    load_model,
    preprocess,
    read_edge_list,
    read_nverts_simplices,
    save_model,
    save_params,
    split,
    summarize,
    write_edge_list,
)
from .estimation import (
    CvResult,
    EdgeCounts,
    FitConfig,
    FitResult,
    cross_validate_dimension,
    fit,
    gradient,
    log_likelihood,
    project,
)
from .exceptions import (
    DataFormatError,
    DegenerateKernelError,
    FitFailureError,
    InvalidParamsError,
    NumericalError,
    NumericalWarning,
)
from .model import (
    ModelParams,
    brute_force_distribution,
    build_kernel,
    check_admissible,
    conditional_exact,
    log_prob_exact,
    marginal_kernel,
    pairwise_conditional,
    two_node_closed_form,
)
from .prediction import EvalReport, auc, evaluate, mpr, percentile_rank, rank_curve
from .sampling import sample_batch, sample_hyperedge, sample_hyperedge_lowrank
from .synth import (
    ScenarioSpec,
    gen_latent,
    gen_popularity,
    gen_skew,
    make_scenario,
    sample_dataset,
    sample_vmf,
    scenario_from_config,
)

__all__ = [
    "__version__",
    "AlignedErrors",
    "AlignmentResult",
    "CvResult",
    "DataFormatError",
    "DatasetSummary",
    "DegenerateKernelError",
    "EdgeCounts",
    "EvalReport",
    "FitConfig",
    "FitFailureError",
    "FitResult",
    "HypergraphDataset",
    "InvalidParamsError",
    "ModelParams",
    "NumericalError",
    "NumericalWarning",
    "ProbabilityErrors",
    "ScenarioSpec",
    "SplitSpec",
    "align_latent",
    "aligned_errors",
    "apply_symmetry",
    "auc",
    "brute_force_distribution",
    "build_kernel",
    "check_admissible",
    "conditional_exact",
    "cross_validate_dimension",
    "evaluate",
    "fit",
    "gen_latent",
    "gen_popularity",
    "gen_skew",
    "gradient",
    "kernel_error",
    "load_model",
    "log_likelihood",
    "log_prob_exact",
    "make_scenario",
    "marginal_kernel",
    "mpr",
    "pairwise_conditional",
    "percentile_rank",
    "preprocess",
    "probability_errors",
    "project",
    "rank_curve",
    "read_edge_list",
    "read_nverts_simplices",
    "sample_batch",
    "sample_dataset",
    "sample_hyperedge",
    "sample_hyperedge_lowrank",
    "sample_vmf",
    "save_model",
    "save_params",
    "scenario_from_config",
    "split",
    "summarize",
    "two_node_closed_form",
    "write_edge_list",
]
