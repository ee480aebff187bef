"""Spectrum reconstruction for spherically truncated multinormal ensembles.

The population covariance of a centered Gaussian, restricted to the ball
||x||^2 < rho, has its eigenvalues shrunk in a spectrum-dependent way.  This
package evaluates that forward map exactly (weighted chi-square series),
inverts it perturbatively to fourth order around the isotropic point, provides
a fixed-point iterative inversion as a baseline, and measures how both behave
on finite samples.
"""
from .errors import (
    DomainError,
    IllConditionedWarning,
    NumericError,
    UnsupportedConfigError,
)
from .forward import (
    DomainReport,
    McEstimate,
    WeightedCdfInfo,
    alpha,
    alpha_k,
    alpha_with_info,
    domain_check,
    forward_family,
    forward_map,
    mc_oracle,
    weighted_chi2_cdf,
)
from .iterative import IterationTrace, fixed_point_solve
from .jets import (
    EpsilonJet,
    ExtractionResult,
    compare_to_stored,
    extract_gamma,
    extract_gamma_table,
    jet_alpha,
    residual,
    source_from_jets,
)
from .perturb import (
    MAX_ORDER,
    ExpansionState,
    ReconstructionResult,
    choose_mu_tilde,
    g_vector,
    lambda1_closed_form,
    lambda2_closed_form,
    prepare_state,
    reconstruct,
    solve_order,
    split_mu,
    xi,
)
from .simulate import (
    ESTIMATORS,
    SimulationRecord,
    SweepResult,
    bias_variance_sweep,
    intrinsic_bias,
    sample_truncated_covariance,
    stderr_of_variance,
    variance_fits,
)
from .tables import (
    GAMMA_TABLES,
    GammaTable,
    Structure,
    candidate_ratio_keys,
    structure_values,
    zeta_values,
)
from .tallis import (
    CdfLadder,
    TallisPoint,
    jacobian,
    jacobian_det,
    jacobian_det_lower_bound,
    jacobian_inverse,
    jacobian_inverse_apply,
    tallis_alpha,
    tallis_derivative,
    tallis_derivative_via_operator,
    tallis_inverse,
    tallis_map,
    tallis_map_derivative,
    tallis_upper_bound,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # errors
    "DomainError",
    "UnsupportedConfigError",
    "NumericError",
    "IllConditionedWarning",
    # scalar map and Jacobian
    "CdfLadder",
    "TallisPoint",
    "tallis_alpha",
    "tallis_derivative",
    "tallis_derivative_via_operator",
    "tallis_map",
    "tallis_map_derivative",
    "tallis_upper_bound",
    "tallis_inverse",
    "jacobian",
    "jacobian_det",
    "jacobian_det_lower_bound",
    "jacobian_inverse",
    "jacobian_inverse_apply",
    # forward map
    "WeightedCdfInfo",
    "weighted_chi2_cdf",
    "alpha",
    "alpha_k",
    "alpha_with_info",
    "forward_family",
    "forward_map",
    "McEstimate",
    "mc_oracle",
    "DomainReport",
    "domain_check",
    # coefficient tables
    "GAMMA_TABLES",
    "GammaTable",
    "Structure",
    "candidate_ratio_keys",
    "structure_values",
    "zeta_values",
    # perturbative inversion
    "MAX_ORDER",
    "ExpansionState",
    "ReconstructionResult",
    "prepare_state",
    "choose_mu_tilde",
    "split_mu",
    "g_vector",
    "solve_order",
    "lambda1_closed_form",
    "lambda2_closed_form",
    "reconstruct",
    "xi",
    # jets
    "EpsilonJet",
    "jet_alpha",
    "residual",
    "source_from_jets",
    "ExtractionResult",
    "extract_gamma",
    "extract_gamma_table",
    "compare_to_stored",
    # iterative baseline
    "IterationTrace",
    "fixed_point_solve",
    # sample-space study
    "ESTIMATORS",
    "SimulationRecord",
    "SweepResult",
    "sample_truncated_covariance",
    "stderr_of_variance",
    "bias_variance_sweep",
    "variance_fits",
    "intrinsic_bias",
]
