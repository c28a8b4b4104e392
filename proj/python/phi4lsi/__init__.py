"""Lattice phi^4 measures: covariances, counterterms, exact small-model
oracles, MCMC estimators, certified susceptibility profiles and log-Sobolev
lower bounds.  Thin re-export of the compiled module."""

from ._phi4lsi import (
    BfsReport,
    BoundConstants,
    CapabilityError,
    ChainConfig,
    ChainDiagnostics,
    ConfigError,
    CorrelationEstimate,
    CountertermReport,
    CovarianceKernel,
    CovarianceMoments,
    DomainError,
    Field,
    GapReport,
    GapUpperReport,
    GeneralEstimate,
    GeneralModel,
    HessianReport,
    InequalityViolation,
    IoError,
    LatticeSpec,
    LsiBoundReport,
    LsiOptions,
    MassSchedule,
    MomentReport,
    Phi4Params,
    PrecisionError,
    QuadratureGrid,
    ShapeError,
    SiteSystem,
    StepSizeError,
    SusceptibilityProfile,
    WindowReport,
    build_lattice,
    convolve,
    counterterm,
    counterterm_gaps,
    covariance,
    covariance_moments,
    default_bound_constants,
    default_t_grid,
    estimate_moments,
    estimate_two_point,
    gaussian_profile,
    kappa_dot,
    lattice_phi4_bound,
    lp_norm,
    lsi_lower_bound,
    mc_profile,
    moments,
    renormalized_potential,
    run_cli,
    site_system,
    site_system_from_matrix,
    skeleton_profile,
    small_scale_window,
    small_scale_window_exact,
    spectral_gap_upper,
    susceptibility_rowmax,
    truncated_two_point,
    verify_bfs,
    verify_hessian_criterion,
)

__version__ = "0.1.0"

__all__ = [
    "BfsReport",
    "BoundConstants",
    "CapabilityError",
    "ChainConfig",
    "ChainDiagnostics",
    "ConfigError",
    "CorrelationEstimate",
    "CountertermReport",
    "CovarianceKernel",
    "CovarianceMoments",
    "DomainError",
    "Field",
    "GapReport",
    "GapUpperReport",
    "GeneralEstimate",
    "GeneralModel",
    "HessianReport",
    "InequalityViolation",
    "IoError",
    "LatticeSpec",
    "LsiBoundReport",
    "LsiOptions",
    "MassSchedule",
    "MomentReport",
    "Phi4Params",
    "PrecisionError",
    "QuadratureGrid",
    "ShapeError",
    "SiteSystem",
    "StepSizeError",
    "SusceptibilityProfile",
    "WindowReport",
    "build_lattice",
    "convolve",
    "counterterm",
    "counterterm_gaps",
    "covariance",
    "covariance_moments",
    "default_bound_constants",
    "default_t_grid",
    "estimate_moments",
    "estimate_two_point",
    "gaussian_profile",
    "kappa_dot",
    "lattice_phi4_bound",
    "lp_norm",
    "lsi_lower_bound",
    "mc_profile",
    "moments",
    "renormalized_potential",
    "run_cli",
    "site_system",
    "site_system_from_matrix",
    "skeleton_profile",
    "small_scale_window",
    "small_scale_window_exact",
    "spectral_gap_upper",
    "susceptibility_rowmax",
    "truncated_two_point",
    "verify_bfs",
    "verify_hessian_criterion",
]
