"""Covert communication over K-user interference channels with TIN decoding."""

from .channel import (
    DmIcSpec,
    GaussianIcSpec,
    InputWeight,
    chi2_alpha,
    chi2_max,
    effective_channel,
    gaussian_lambda,
    load_spec,
    save_spec,
    validate_assumptions,
)
from .codec import Schedule, generate_codebooks, inflate_schedule, make_schedule, simulate_error_rate, tin_decode
from .errors import *  # noqa: F401,F403
from .harness import ExperimentConfig, SweepResult, run_gaussian_sim, run_scaling_sweep
from .prob import chi_squared, kl_divergence, total_variation
from .region import RegionPoint, pareto_frontier, region_point, region_point_gaussian
from .warden import (
    exact_detection,
    exact_induced_dist,
    lrt_detection_mc,
    mc_relative_entropy,
    resolvability_gap,
)

__version__ = "0.1.0"
