"""Closed-loop simulation, cost accounting and scheme comparison."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .network import InflowProfile, NetworkGraph
from .tolerances import DEFAULT_TOL, Tolerances
from .traffic import (LinearCost, centralized_action,
                      decentralized_onehop_action, trivial_action)

TRAFFIC_SCHEMES = ("centralized", "decentralized", "trivial")


@dataclass
class Trajectory:
    """Realized closed-loop time series with per-step cost accounting.

    states (N+1, n), controls (N, n), inflows (N, n); stage_costs[k] is the
    running cost charged when u^k is applied, terminal_cost the final-state
    charge, and total_cost their sum.
    """

    states: np.ndarray
    controls: np.ndarray
    inflows: np.ndarray
    stage_costs: np.ndarray
    terminal_cost: float
    total_cost: float
    scheme: str = ""
    metadata: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.controls.shape[0]


def _traffic_controller(scheme, controller_lambda):
    if callable(scheme):
        return scheme
    if scheme == "centralized":
        return lambda net, cost, k, x: centralized_action(
            net, cost, k, x, lam=controller_lambda)
    if scheme == "decentralized":
        return lambda net, cost, k, x: decentralized_onehop_action(net, cost, k, x)
    if scheme == "trivial":
        return lambda net, cost, k, x: trivial_action(net, x)
    raise ValueError(f"unknown scheme {scheme!r}; expected one of {TRAFFIC_SCHEMES}")


def simulate(model, controller, x0, cost=None, exogenous=None,
             controller_lambda=None, tol: Tolerances = DEFAULT_TOL) -> Trajectory:
    """Roll the chosen controller forward in closed loop.

    For a traffic network, ``controller`` is one of the scheme names
    ('centralized', 'decentralized', 'trivial') or a callable
    (net, cost, k, x) -> u; ``exogenous`` is the realized inflow profile
    while ``controller_lambda`` is what the controller assumes (None = the
    zero-inflow law).  Gas models dispatch to the pipeline rollout.
    """
    from .gas import GasLineNetwork, simulate_gas

    if isinstance(model, GasLineNetwork):
        return simulate_gas(model, controller, x0=x0, tol=tol)
    if not isinstance(model, NetworkGraph):
        raise TypeError(f"cannot simulate a {type(model).__name__}")
    if cost is None:
        raise ValueError("traffic simulation needs a LinearCost")
    return simulate_traffic(model, cost, controller, x0, lam=exogenous,
                            controller_lambda=controller_lambda, tol=tol)


def simulate_traffic(net: NetworkGraph, cost: LinearCost, scheme, x0,
                     lam: InflowProfile | None = None, controller_lambda=None,
                     tol: Tolerances = DEFAULT_TOL) -> Trajectory:
    from .network import step_dynamics

    control = _traffic_controller(scheme, controller_lambda)
    n = net.n_cells
    big_n = cost.horizon
    x = np.asarray(x0, dtype=float).copy()
    states = np.zeros((big_n + 1, n))
    controls = np.zeros((big_n, n))
    inflows = np.zeros((big_n, n))
    stage = np.zeros(big_n)
    states[0] = x
    for k in range(big_n):
        u = np.asarray(control(net, cost, k, x), dtype=float)
        lam_k = lam.at(k) if lam is not None else None
        from .network import inflow_rates

        y = inflow_rates(net, u, lam_k)
        stage[k] = float(cost.alpha[k] @ x + cost.beta[k] @ u)
        x = step_dynamics(net, x, u, lam_k)
        controls[k] = u
        inflows[k] = y
        states[k + 1] = x
    terminal = float(cost.alpha[big_n] @ x)
    total = float(stage.sum() + terminal)
    name = scheme if isinstance(scheme, str) else getattr(scheme, "__name__", "custom")
    return Trajectory(states=states, controls=controls, inflows=inflows,
                      stage_costs=stage, terminal_cost=terminal,
                      total_cost=total, scheme=name)


def evaluate_cost(traj: Trajectory, cost: LinearCost) -> float:
    """Exact cost of a recorded trajectory: terminal charge plus the sum of
    per-step running charges."""
    big_n = traj.horizon
    if cost.horizon != big_n:
        raise ValueError(f"cost horizon {cost.horizon} != trajectory horizon {big_n}")
    total = float(cost.alpha[big_n] @ traj.states[big_n])
    for k in range(big_n):
        total += float(cost.alpha[k] @ traj.states[k]
                       + cost.beta[k] @ traj.controls[k])
    return total


def relative_loss(j_dec: float, j_cen: float) -> float:
    """Decentralization performance loss in percent: 100 (J_dec - J_cen) / J_cen."""
    if j_cen == 0:
        raise ZeroDivisionError("relative loss undefined for J_cen = 0")
    return 100.0 * (j_dec - j_cen) / j_cen


@dataclass
class SchemeComparison:
    """Costs per scheme plus pairwise relative losses."""

    costs: dict[str, float]

    def loss(self, scheme: str, baseline: str = "centralized") -> float:
        return relative_loss(self.costs[scheme], self.costs[baseline])

    def table(self) -> str:
        lines = ["scheme,cost,loss_vs_centralized_pct"]
        base = self.costs.get("centralized")
        for name, val in self.costs.items():
            if base not in (None, 0):
                lines.append(f"{name},{val:.12g},{relative_loss(val, base):.6g}")
            else:
                lines.append(f"{name},{val:.12g},")
        return "\n".join(lines) + "\n"


def trajectory_to_csv(traj: Trajectory, cost: LinearCost | None = None) -> str:
    """Long-format trace: one row per (step, cell) with per-cell stage cost.

    Formatting is fixed-precision repr so identical runs emit identical
    bytes.
    """
    n = traj.states.shape[1]
    big_n = traj.horizon
    lines = ["k,cell,x,u,y,stage_cost"]

    def fmt(v):
        return f"{v:.17g}"

    for k in range(big_n):
        for i in range(n):
            sc = ""
            if cost is not None:
                sc = fmt(cost.alpha[k, i] * traj.states[k, i]
                         + cost.beta[k, i] * traj.controls[k, i])
            lines.append(
                f"{k},{i + 1},{fmt(traj.states[k, i])},"
                f"{fmt(traj.controls[k, i])},{fmt(traj.inflows[k, i])},{sc}")
    for i in range(n):
        sc = fmt(cost.alpha[big_n, i] * traj.states[big_n, i]) if cost is not None else ""
        lines.append(f"{big_n},{i + 1},{fmt(traj.states[big_n, i])},,,{sc}")
    return "\n".join(lines) + "\n"
