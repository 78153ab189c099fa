"""Verification toolkit for gradient estimates of the graph heat semigroup.

Builds weighted graphs, evaluates the discrete operators and curvature
functionals, solves the heat equation exactly through the spectral
propagator, and numerically certifies the gradient estimates, Harnack
inequalities and heat-kernel bound shapes on desk-scale graphs.
"""

from .graphs import (CutoffFunction, GraphBounds, WeightedGraph, cutoff_build,
                     generate, graph_from_spec, strong_cutoff_verify)
from .operators import (gamma, gamma2, gamma2_tilde, laplacian,
                        sqrt_identity_residual)
from .heat import (HeatKernel, HeatSolution, delta_initial, evolve,
                   heat_kernel, propagator, rk4_evolve, sqrt_time_derivative)
from .profiles import (ProfileError, RateProfile, alpha_phi, condition_a_check,
                       condition_b_check, ode_system_residuals,
                       parse_profile_spec, verify_assumptions)
from .curvature import (CdeOptions, CurvatureReport, cde_best_K, cde_functional,
                        cde_holds, cde_report)
from .estimates import (InequalityReport, default_time_grid,
                        evolution_identity_residual, hamilton_check,
                        liouville_check, liyau_global_check, liyau_local_check,
                        liyau_strong_local_check, max_principle_check,
                        zero_laplacian_check)
from .harnack import (HarnackRho, chaining_minimum_bound_check, harnack_check,
                      kernel_bounds_check, rho_closed_form_bound, rho_compute)

__version__ = "0.1.0"
