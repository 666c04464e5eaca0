"""steinflow: momentum-accelerated kernel particle samplers, Langevin baselines,
and the analytic Gaussian-dynamics layer that validates them."""

from ._backend import BACKEND
from .config import ExperimentConfig, parse_config
from .diagnostics import MetricRecord, empirical_moments, kl_estimate
from .experiment import analyze_spectrum, run_experiment, run_sweep
from .gaussian_flow import (
    AcceleratedGaussianState,
    GaussianState,
    asvgd_gaussian_rhs,
    closed_form_sigma,
    gamma_rate,
    hamiltonian,
    integrate_rk4,
    kl_gaussians,
    stein_gaussian_metric_inverse,
    svgd_gaussian_rhs,
)
from .kernels import (
    BilinearKernel,
    GaussianKernel,
    GramMatrix,
    eval_kernel,
    grad1,
    grad2,
    gram,
    median_bandwidth,
    regularized_inverse_apply,
)
from .samplers import (
    ConstantDamping,
    ParticleEnsemble,
    RestartNesterov,
    SamplerConfig,
    asvgd_step,
    gradient_restart_stat,
    mala_step,
    run,
    svgd_step_bilinear,
    svgd_step_gaussian,
    ula_step,
    uld_step,
)
from .spectral import (
    SpectralReport,
    asvgd_linearized_spectrum,
    asvgd_rates,
    eigs_1d,
    euler_contraction_check,
    optimal_a_svgd,
    optimal_damping,
    svgd_linearized_matrix,
)
from .targets import (
    CustomTarget,
    DoubleBananasTarget,
    GaussianTarget,
    QuarticTarget,
    builtin,
    builtin_names,
    builtin_targets,
    grad_potential,
    potential,
)

__version__ = "0.1.0"
