from .manifold import (
    Euclidean, Sphere, ManifoldPoint, TangentVector,
    project_to_tangent, exp_map, retract_normalize, geodesic_distance, inner,
)
from .objective import (
    Objective, SphereHeight, Quadratic, HalfSquare,
    evaluate, euclidean_gradient, riemannian_gradient, finite_difference_gradient, lipschitz_estimate,
)
from .noise import NoiseFamily, NoiseSpec, RngState, sample, empirical_moment
from .optimize import (
    ScheduleSpec, StepRule, RunConfig,
    rgd_step, momentum_step, sgd_step, exact_line_search_quadratic, momentum_ratio_beta,
    run, run_rgd, run_momentum, run_sgd, run_sgd_batch, validate_schedule,
)
from .analysis import Trace, energy, energy_series, mean_trace, fit_rate, check_bound
from .errors import DescentError, ConfigError, DimensionError, ManifoldError, NumericalAbort
from .constants import __VERSION__, app_name
