"""Simulation and stability verification for perturbed Moreau sweeping
processes ``-x'(t) in N_C(t)(x(t)) + f(t, x(t), eps)``."""

from .convex_sets import (Ball, Box, HalfspaceIntersection, Interval, MovingSet, Translate,
                          bounding_radius, contains, dykstra_project, hausdorff_distance,
                          normal_cone_residual, project, support)
from .dynamics import (AveragedField, Perturbation, averaged_field, bohr_mean,
                       estimate_lipschitz, estimate_monotonicity, integral_deviation)
from .integrator import (Scenario, Trajectory, bounded_solution, catch_up, inclusion_residual,
                         richardson_order, velocity_bound)
from .analysis import (almost_period_search, averaging_check, gronwall_check,
                       incremental_decay, perturbation_response, shift_tolerance,
                       theorem4_bound)
from .scenarios import REGISTRY, get_scenario

__version__ = "0.1.0"
