"""Semidefinite programs for assisted capacities and simulation costs."""

from .capacity import CapacityResult, capacity_from, sim_cost_from, solve_capacity
from .model import SdpError, SdpProblem
from .programs import (
    build_avg_error_freepar,
    build_capacity_free,
    build_capacity_freedef2,
    build_capacity_freefix,
    build_capacity_freefix2,
    build_capacity_freepar,
    build_min_error_freepar,
    build_sim_cost_par,
    build_zero_error_dual_free,
    build_zero_error_dual_freedef2,
)
from .solvers import SolverError, SolverResult, solve
from .twirl import pauli_twirl
