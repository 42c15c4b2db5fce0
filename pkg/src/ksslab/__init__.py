"""Numerical laboratory for real roots of KSS random polynomial systems.

Samples Kostlan-Shub-Smale systems, counts their real roots with certified
methods, and cross-validates three independent computations of the scaled
root-count variance: Monte Carlo over exact counts, the finite-degree
Kac-Rice integral, and the closed-form degree limit.
"""

from .asymptotics import (
    big_m_k,
    m_kj,
    norm_product_mean,
    rho_bar,
    sigma_bar_sq,
    v_infinity,
)
from .engine import ExperimentConfig, compare_routes, run_experiment
from .hermite import (
    b_coefficient,
    f_coefficient,
    f_tilde_22,
    hermite_eval,
    i2d_lower_bound,
)
from .kernel import (
    QuadratureSpec,
    ScaledKernel,
    conditional_covariance,
    g_functional,
    scaled_kernel,
    second_factorial_moment,
    variance_finite_d,
)
from .multiindex import MultiIndex, graded_lex_indices
from .rootcount import (
    MomentEstimate,
    RootCountResult,
    count_system,
    count_univariate,
    estimate_moments,
)
from .systems import (
    KssSystem,
    SpherePoint,
    covariance,
    eval_system,
    homogenize,
    sample_system,
    spherical_gradient,
)

__version__ = "0.1.0"
