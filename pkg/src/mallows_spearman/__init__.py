"""Bayesian inference for the Mallows ranking model with Spearman distance.

The likelihood kernel exp(-theta * ||rho - r||^2) over rankings pairs with
a conjugate location prior whose mode may sit anywhere in the
permutohedron.  The package provides the geometry primitives, exact
partition functions, closed-form posterior updates, exact small-n
posteriors, and an MH-within-Gibbs sampler, plus a CLI that reproduces the
bundled reference studies.
"""

from .errors import (
    DataValidationError,
    EnumerationLimit,
    EstimateDiverged,
    GridRangeError,
    LengthMismatch,
    MallowsError,
    NonUniqueMLE,
    TableFormatError,
    TiesPresent,
)
from .inference import (
    JointPosterior,
    McmcConfig,
    McmcTrace,
    SufficientStats,
    ThetaPrior,
    TraceSummary,
    exact_posterior_fixed_theta,
    exact_posterior_joint,
    leap_and_shift,
    leap_shift_log_prob,
    mh_step_rho,
    mh_step_theta,
    run_mcmc,
    summarize,
)
from .model import (
    MmsParams,
    log_pmf,
    mean_observed_distance,
    mle_rho,
    mle_theta,
    sample_exact,
    sample_mcmc,
    solve_theta_mean_equation,
)
from .partition import (
    N_ENUM_MAX,
    DistanceFrequencyTable,
    ZStarGrid,
    build_frequency_table,
    build_zstar_grid,
    expected_distance,
    interpolate_log_zstar,
    jeffreys_log_density,
    load_table,
    log_z,
    log_z_star,
    save_table,
    variance_distance,
)
from .perm import (
    PermutohedronPoint,
    Ranking,
    RankingSample,
    all_rankings,
    compose,
    coord_sum,
    inverse,
    max_distance,
    radius_sq,
    rank_vector,
    sample_mean,
    spearman_distance,
    sq_norm,
)
from .prior import (
    Comparison,
    EmmsPrior,
    PosteriorParams,
    elicit_from_covariates,
    elicit_multi_expert,
    elicit_topk,
    emms_log_density,
    map_estimate,
    posterior_update,
    theorem1_compare,
)

__version__ = "0.1.0"
