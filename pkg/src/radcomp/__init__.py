"""Comparison functions for radial quasilinear elliptic inequalities.

The package builds the comparison function ``m`` by successive
approximation of a weighted Volterra integral equation, evaluates the
matching lower bound for the sphere maximum ``M(r; u)``, and checks both
against manufactured radial solutions.
"""

from .bounds import (KINDS, WindowSpec, calibrate_gamma, check_growth, growth_bound_rhs,
                     sample_windows)
from .constants import ComparisonConstants, compute_alpha, compute_beta
from .errors import (CalibrationUndefined, ComparisonFailure, ConfigError, InvalidInputError,
                     NotAdmissibleError, PreconditionError, RadcompError, WindowError)
from .model import (DriftB, NonlinearityF, ProblemParams, RadialGrid, Trace, monotone_envelope,
                    shell_envelope, validate_nonlinearity)
from .oracle import (admissible_pair_from_profile, find_alpha_star, manufacture,
                     radial_divergence, verify_comparison)
from .picard import PicardResult, picard_step, solve_comparison_function
from .quadrature import KernelAccumulator, inner_integral, kernel, lower_bound_integral
from .verify import flux_residual, independent_integrate, pointwise_residual_2_5

__version__ = "0.1.0"
