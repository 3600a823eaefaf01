"""Performative learning toolkit.

Distribution shift as a push-forward of a base law, pathwise and
score-function estimators of the performative gradient, risk certification
(convexity, adversarial equivalence, regularization bound) and the
deploy-sample-update algorithms, with a CSV experiment harness.
"""

from .estimators import (
    GaussianMeanCase,
    GradientEstimate,
    cov_rp_analytic,
    cov_sf_analytic,
    cov_sf_baseline_optimal,
    empirical_covariance,
    gaussian_shift_score,
    optimal_baseline,
    rp_gradient,
    sf_gradient,
)
from .losses import (
    ClassificationLoss,
    PricingLoss,
    Surrogate,
    pricing_grad_theta,
    pricing_grad_z,
    pricing_loss,
)
from .models import (
    EmpiricalClassModel,
    GaussianClassModel,
    PerformativeModel,
    PricingModel,
    SampleBatch,
    ShiftOperator,
    relocalize,
    sample_base,
    sample_deployed,
    shift_jacobian,
    zero_shift,
)
from .optimizers import (
    ALGORITHMS,
    OptimizerConfig,
    PiEstimatorState,
    RunRecord,
    run,
    step_rgd,
    step_rpperfgd,
    step_rrm,
    step_sfperfgd,
    update_pi_estimate,
)
from .risk import (
    ConvexityReport,
    RiskEvaluation,
    adversarial_inner_max,
    check_bound,
    convexity_profile,
    dpr_closed_pricing,
    dpr_monte_carlo,
    frozen_batch,
    minimize_pr_reference,
    pi_norm,
    pr_adversarial_form,
    pr_closed_pricing,
    pr_closed_quadratic,
    pr_monte_carlo,
    pr_reference,
    pr_reference_grad,
    pricing_optimum,
    profile_lambda_sweep,
    random_probe_pairs,
    regularization_bound,
)
from .tasks import (
    HousingTaskSpec,
    build_gauss2d,
    build_gauss7d,
    build_pricing,
    load_housing,
    make_synthetic_housing,
)

__version__ = "0.1.0"
