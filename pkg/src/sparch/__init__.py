"""Spatial ARCH processes: simulation, exact ML estimation, diagnostics.

The package models vectors observed over a finite set of sites whose
conditional variance at each site responds to squared observations at
neighboring sites.  It provides:

* weights-matrix constructions and validity analysis (:mod:`.weights`),
* exact simulation of the process and of spatial autoregressions driven
  by it (:mod:`.process`),
* exact maximum-likelihood fitting with scores and observed information
  (:mod:`.likelihood`, :mod:`.fitting`), plus scikit-learn style
  estimator wrappers (:mod:`.estimators`),
* Moran's I diagnostics and spatial autocorrelation functions
  (:mod:`.diagnostics`),
* reproducible Monte Carlo experiment drivers and a command-line
  interface (:mod:`.experiments`, :mod:`.cli`).
"""

from .diagnostics import MoranResult, SpatialACF, morans_i, residual_diagnostics, spatial_acf
from .domain import SpatialDomain
from .errors import (
    ErrorSpec,
    GaussianError,
    TruncatedGaussianError,
    UniformError,
    error_spec_from_config,
)
from .estimators import SARSpARCH, SpARCH
from .experiments import (
    EXPERIMENTS,
    ExperimentConfig,
    ExperimentResult,
    Table,
    run_experiment,
)
from .exceptions import (
    DegenerateInputError,
    InvalidDomainError,
    InvalidModelError,
    InvalidParameterError,
    InvalidPointError,
    InvalidWeightsError,
    NonnegativityViolationError,
    NumericalError,
    SingularSystemError,
    SpArchError,
    UsageError,
)
from .fitting import FitConfig, FitResult, fit_ml, fit_sar_sparch
from .likelihood import (
    aic,
    information_matrix,
    jacobian_logabsdet,
    loglik_general,
    loglik_sar_sparch,
    loglik_triangular,
    sar_logabsdet,
    score_triangular,
)
from .process import (
    Realization,
    SarRealization,
    SarSpArchModel,
    SpArchModel,
    ValidityReport,
    build_A,
    closed_form_two_site,
    eta_vector,
    realize,
    simulate,
    simulate_sar_sparch,
    solve_y2,
    spgarch_h,
    validate_model,
)
from .weights import (
    SparseWeights,
    as_sparse_weights,
    build_arch_embedding,
    build_inverse_distance,
    build_knn,
    build_oriented,
    build_queen_lag,
    build_rook,
    build_sparch_p,
    build_spatiotemporal,
    graph_distance_bands,
    row_standardize,
    support_bound,
    triangularize,
)

__version__ = "0.1.0"

__all__ = [
    "SpatialDomain",
    "SparseWeights",
    "as_sparse_weights",
    "build_rook",
    "build_queen_lag",
    "build_knn",
    "build_inverse_distance",
    "build_sparch_p",
    "build_oriented",
    "build_arch_embedding",
    "build_spatiotemporal",
    "graph_distance_bands",
    "row_standardize",
    "triangularize",
    "support_bound",
    "ErrorSpec",
    "GaussianError",
    "TruncatedGaussianError",
    "UniformError",
    "error_spec_from_config",
    "SpArchModel",
    "SarSpArchModel",
    "Realization",
    "SarRealization",
    "ValidityReport",
    "build_A",
    "eta_vector",
    "solve_y2",
    "validate_model",
    "realize",
    "simulate",
    "simulate_sar_sparch",
    "closed_form_two_site",
    "spgarch_h",
    "loglik_triangular",
    "loglik_general",
    "loglik_sar_sparch",
    "score_triangular",
    "information_matrix",
    "jacobian_logabsdet",
    "sar_logabsdet",
    "aic",
    "FitConfig",
    "FitResult",
    "fit_ml",
    "fit_sar_sparch",
    "SpARCH",
    "SARSpARCH",
    "EXPERIMENTS",
    "ExperimentConfig",
    "ExperimentResult",
    "Table",
    "run_experiment",
    "morans_i",
    "spatial_acf",
    "residual_diagnostics",
    "MoranResult",
    "SpatialACF",
    "SpArchError",
    "UsageError",
    "NumericalError",
    "InvalidDomainError",
    "InvalidWeightsError",
    "InvalidModelError",
    "InvalidParameterError",
    "DegenerateInputError",
    "SingularSystemError",
    "NonnegativityViolationError",
    "InvalidPointError",
]
