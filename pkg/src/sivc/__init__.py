"""Censored single-index varying-coefficient regression.

Estimates direction curves beta(t) on the unit sphere by local profile
least squares and the unknown link by Nadaraya-Watson smoothing of
Kaplan-Meier synthetic responses, with a Monte Carlo harness and CLI for
reproducing the accompanying simulation study.
"""

__version__ = "0.1.0"

from .censoring import (
    SurvivalCurve,
    calibrate_censoring,
    estimate_censoring_survival,
    survival_at,
    synthetic_responses,
)
from .errors import (
    CalibrationError,
    DegenerateDirectionError,
    DegeneratePredictorError,
    EstimationError,
    InsufficientLocalSampleError,
    NoLocalDataError,
    QuadratureError,
    SivcError,
    UnboundedSyntheticWeightError,
    UnidentifiableSignError,
    ValidationError,
)
from .estimator import (
    DirectionFit,
    FitConfig,
    LinkEstimate,
    ModelFit,
    OptimizerConfig,
    angles_from_direction,
    compute_index,
    direction_from_angles,
    fit_coefficient_curves,
    fit_direction_at,
    fit_link,
    fit_model,
    local_objective,
)
from .model import (
    CensoredObservation,
    CoefficientCurves,
    Dataset,
    UnitDirection,
    censoring_rate,
    evaluate_curves,
    normalize_direction,
    validate_dataset,
)
from .simulate import (
    SimConfig,
    SimSummary,
    TruthRecord,
    generate_dataset,
    pointwise_quantile,
    resolve_censor_scale,
    run_monte_carlo,
)
from .smoothing import (
    Bandwidths,
    KernelSpec,
    cv_bandwidth,
    density_estimate,
    kernel_weight,
    nw_estimate,
    profile_smoother,
    rule_of_thumb_bandwidth,
    select_bandwidths,
)
from .theory import (
    CensorModel,
    NoiseModel,
    gaussian_noise,
    gaussian_noise_sampler,
    mc_conditional_mean,
    theoretical_mean_response,
    uniform_censor,
    uniform_censor_sampler,
)

__all__ = [name for name in dir() if not name.startswith("_")]
