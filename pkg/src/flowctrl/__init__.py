"""Optimal feedback flow control for cell-based transport networks.

Synthesizes and simulates finite-horizon optimal feedback controllers for
cell-transmission traffic networks (centralized piecewise-affine feedback,
one-hop decentralized relaxation, trivial control) and gas pipeline lines
(conservative LP convexification plus a separable-programming bound).
"""

from ._accel import BACKEND, NUMBA_ENABLED
from .gas import (BreakpointGrid, GasLineNetwork, GasTrajectory, build_lp1,
                  build_lp2, check_feasibility_nonconvex,
                  gas_centralized_action, gas_decentralized_action, load_gas,
                  save_gas, simulate_gas, suboptimality_gap)
from .horizon import HorizonLp
from .mplp import (OutOfDomainError, ParametricLp, Polyhedron, PwaFeedbackLaw,
                   ScaleExceededError, eval_pwa, load_law, save_law,
                   solve_mplp)
from .network import (CellParams, ConstraintViolationError, FlowBounds,
                      InflowProfile, Junction, NetworkGraph,
                      UnsupportedTopologyError, flow_bounds, inflow_rates,
                      junction_type, load_inflow, load_network, neighborhoods,
                      save_network, step_dynamics, validate_network)
from .sim import (SchemeComparison, Trajectory, evaluate_cost, relative_loss,
                  simulate, simulate_traffic, trajectory_to_csv)
from .simplex import (InfeasibleError, LinearProgram, LpSolution, LpStatus,
                      MaxIterationsError, UnboundedError, solve_lp)
from .tolerances import DEFAULT_TOL, Tolerances
from .traffic import (LinearCost, build_horizon_lp, centralized_action,
                      check_thm3_conditions, cost_coefficients,
                      decentralized_onehop_action, load_cost,
                      synthesize_explicit, trivial_action)

__version__ = "0.1.0"

__all__ = [
    "BACKEND", "NUMBA_ENABLED", "DEFAULT_TOL", "Tolerances", "__version__",
    # network model
    "CellParams", "NetworkGraph", "Junction", "InflowProfile", "FlowBounds",
    "ConstraintViolationError", "UnsupportedTopologyError",
    "validate_network", "junction_type", "neighborhoods", "inflow_rates",
    "step_dynamics", "flow_bounds", "load_network", "save_network",
    "load_inflow",
    # LP core
    "LinearProgram", "LpSolution", "LpStatus", "solve_lp", "InfeasibleError",
    "UnboundedError", "MaxIterationsError", "ParametricLp", "Polyhedron",
    "PwaFeedbackLaw", "solve_mplp", "eval_pwa", "ScaleExceededError",
    "OutOfDomainError", "save_law", "load_law", "HorizonLp",
    # traffic control
    "LinearCost", "cost_coefficients", "build_horizon_lp",
    "centralized_action", "synthesize_explicit", "trivial_action",
    "check_thm3_conditions", "decentralized_onehop_action", "load_cost",
    # gas control
    "GasLineNetwork", "BreakpointGrid", "GasTrajectory", "build_lp1",
    "build_lp2", "gas_centralized_action", "gas_decentralized_action",
    "check_feasibility_nonconvex", "suboptimality_gap", "simulate_gas",
    "load_gas", "save_gas",
    # simulation harness
    "Trajectory", "simulate", "simulate_traffic", "evaluate_cost",
    "relative_loss", "SchemeComparison", "trajectory_to_csv",
]
