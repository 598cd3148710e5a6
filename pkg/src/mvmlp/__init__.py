"""Multilevel Picard approximation of mean-field SDEs with nonconstant diffusion."""

from .bench import ExperimentConfig, ResultRow, l2_error, run_cell, run_experiment
from .mlp import (
    ALG1,
    SPEC,
    CostLedger,
    MlpConfig,
    NumericOverflowError,
    analytic_cost,
    mlp_estimate,
    verify_ledger,
)
from .models import (
    CostUnits,
    KuramotoParams,
    ModelSpec,
    OuParams,
    default_cost_units,
    kuramoto_diffusion,
    kuramoto_drift,
    kuramoto_model,
    ou_diffusion,
    ou_drift,
    ou_model,
    random_params,
)
from .numerics import (
    DiscretePath,
    TimeGrid,
    grid_floor_index,
    mat_exp,
    solve_linear_ode,
    solve_lyapunov_ode,
)
from .randomness import (
    MultiIndex,
    RandomStream,
    derive_stream,
    sample_brownian_increments,
    sample_uniform,
)
from .reference import (
    KuramotoMoments,
    OuMoments,
    kuramoto_moments,
    kuramoto_reference_path,
    ou_exact_path,
    ou_marginal_cov,
    ou_mean,
    ou_q_process,
    particle_system_path,
)

__version__ = "0.1.0"
