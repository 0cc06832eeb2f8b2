"""Finite-horizon traffic controllers over the cell-transmission dynamics.

Builds the horizon LP in the controls with states eliminated through the
closed-form conservation recursion, and realizes three control schemes:

* centralized: re-solve the horizon LP at the measured state, apply the
  first control block (pointwise equal to the explicit pwa law);
* decentralized one-hop: per cell, a local LP over the cell and its
  downstream-junction neighborhood with all non-local rows relaxed;
* trivial: every outflow at its state-dependent upper limit.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .horizon import HorizonLp
from .mplp import Polyhedron, PwaFeedbackLaw, solve_mplp
from .network import InflowProfile, NetworkGraph, flow_bounds
from .tolerances import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class LinearCost:
    """Linear stage/terminal weights: alpha (N+1, n) on states, beta (N, n)
    on controls, over horizon N."""

    alpha: np.ndarray
    beta: np.ndarray
    horizon: int

    def __post_init__(self):
        alpha = np.atleast_2d(np.asarray(self.alpha, dtype=float))
        beta = np.atleast_2d(np.asarray(self.beta, dtype=float))
        n = alpha.shape[1]
        if alpha.shape[0] != self.horizon + 1:
            raise ValueError(
                f"alpha must have horizon+1 = {self.horizon + 1} rows, "
                f"got {alpha.shape[0]}")
        if beta.shape != (self.horizon, n) and self.horizon > 0:
            raise ValueError(f"beta must be ({self.horizon}, {n})")
        if np.any(alpha < 0):
            raise ValueError("state weights alpha must be nonnegative")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_cells(self) -> int:
        return self.alpha.shape[1]

    @classmethod
    def constant(cls, alpha, beta, horizon: int, n_cells: int | None = None):
        """Time-invariant weights broadcast over the horizon."""
        alpha = np.atleast_1d(np.asarray(alpha, dtype=float))
        beta = np.atleast_1d(np.asarray(beta, dtype=float))
        if n_cells is not None:
            alpha = alpha + np.zeros(n_cells)
            beta = beta + np.zeros(n_cells)
        return cls(np.tile(alpha, (horizon + 1, 1)),
                   np.tile(beta, (horizon, 1)) if horizon else np.zeros((0, alpha.size)),
                   horizon)

    def restrict(self, cells) -> "LinearCost":
        idx = list(cells)
        return LinearCost(self.alpha[:, idx], self.beta[:, idx], self.horizon)


def cost_coefficients(net: NetworkGraph, cost: LinearCost) -> np.ndarray:
    """Decision-variable coefficients mu (N, n) of the eliminated objective.

    mu[k, q] = -beta[k, q]
               + sum_{j=k+1..N} Ts (alpha[j, q] - sum_{i not on-ramp} R_qi alpha[j, i]);
    the horizon objective is then g(x, lambda) - sum mu[k, q] u_q^k.
    """
    n = net.n_cells
    big_n = cost.horizon
    mask = np.ones(n)
    for i in net.on_ramps:
        mask[i] = 0.0
    w2 = cost.alpha - (cost.alpha * mask) @ net.split_ratios.T
    tail = np.zeros((big_n + 2, n))
    tail[:big_n + 1] = np.cumsum(w2[::-1], axis=0)[::-1]
    mu = np.zeros((big_n, n))
    for k in range(big_n):
        mu[k] = -cost.beta[k] + net.sampling_time * tail[k + 1]
    return mu


def cost_constant(net: NetworkGraph, cost: LinearCost, k: int, xk: np.ndarray,
                  lam: InflowProfile | None = None) -> float:
    """Control-independent objective part g(x^k, lambda) over [k, N]."""
    xk = np.asarray(xk, dtype=float)
    g = float(cost.alpha[k:].sum(axis=0) @ xk)
    if lam is not None:
        ts = net.sampling_time
        for step in range(k, cost.horizon):
            coef = cost.alpha[step + 1:].sum(axis=0)
            g += ts * float(coef @ lam.at(step))
    return g


def build_horizon_lp(net: NetworkGraph, cost: LinearCost, k: int,
                     xk: np.ndarray, lam: InflowProfile | None = None) -> HorizonLp:
    """Assemble the horizon-[k, N] LP at state x^k.

    States are eliminated via x^j = x^k + Ts * (cumulative inflow - outflow),
    so each demand/supply row at step j spreads the conservation
    coefficients over all earlier control blocks.  Exogenous inflow enters
    only the right-hand sides of on-ramp demand rows (and the constant
    objective offset).
    """
    n = net.n_cells
    big_n = cost.horizon
    if cost.n_cells != n:
        raise ValueError(f"cost has {cost.n_cells} cells, network has {n}")
    if not 0 <= k <= big_n:
        raise ValueError(f"start step {k} outside horizon [0, {big_n}]")
    xk = np.asarray(xk, dtype=float)
    ts = net.sampling_time
    steps = big_n - k
    nv = n * steps

    mu = cost_coefficients(net, cost)
    c = np.zeros(nv)
    for j in range(k, big_n):
        c[(j - k) * n:(j - k + 1) * n] = -mu[j]

    # conservation spread: d x_i^{j+1} / d u_q^j = m_spread[i, q]
    m_spread = ts * (net.split_ratios.T - np.eye(n))
    for i in net.on_ramps:
        m_spread[i, :] = 0.0
        m_spread[i, i] = -ts

    # cumulative exogenous inflow: lam_cum[j - k, i] = Ts * sum_{l<j} lambda_i^l
    lam_cum = np.zeros((steps + 1, n))
    if lam is not None:
        for rel in range(steps):
            lam_cum[rel + 1] = lam_cum[rel] + ts * lam.at(k + rel)

    ub = np.empty(n)
    for i in range(n):
        cell = net.cells[i]
        cap = cell.capacity
        j = net.head_junction(i)
        if j is not None and len(j.incoming) == 1:
            for s in j.outgoing:
                cap = min(cap, net.cells[s].capacity / net.split_ratios[i, s])
        ub[i] = cap
    ub_full = np.tile(ub, steps)

    rows_a: list[np.ndarray] = []
    rows_g: list[float] = []
    rows_s: list[np.ndarray] = []
    labels: list[tuple] = []

    junctions = net.junctions()
    for j_abs in range(k, big_n):
        rel = j_abs - k

        def state_row(i: int, coef: float, a_row: np.ndarray):
            """Add coef * x_i^{j_abs} to the row's control/parameter parts."""
            blob = a_row.reshape(steps, n)
            if rel > 0:
                blob[:rel] += coef * m_spread[i]
            return coef * lam_cum[rel, i]

        for i in range(n):
            cell = net.cells[i]
            a_row = np.zeros(nv)
            a_row[rel * n + i] = 1.0
            vl = cell.free_flow_speed / cell.length
            g_extra = state_row(i, -vl, a_row)
            rows_a.append(a_row)
            rows_g.append(-g_extra)
            s_row = np.zeros(n)
            s_row[i] = vl
            rows_s.append(s_row)
            labels.append(("demand", j_abs, i))

        for jct in junctions:
            if len(jct.incoming) == 1:
                i = jct.incoming[0]
                for s in jct.outgoing:
                    cs = net.cells[s]
                    if not np.isfinite(cs.jam_density):
                        continue
                    rati = net.split_ratios[i, s]
                    coef = cs.backward_wave_speed / (rati * cs.length)
                    a_row = np.zeros(nv)
                    a_row[rel * n + i] = 1.0
                    g_extra = state_row(s, coef, a_row)
                    rows_a.append(a_row)
                    rows_g.append(cs.backward_wave_speed * cs.jam_density / rati
                                  - g_extra)
                    s_row = np.zeros(n)
                    s_row[s] = -coef
                    rows_s.append(s_row)
                    labels.append(("supply", j_abs, i, s))
            else:
                q = jct.outgoing[0]
                cq = net.cells[q]
                a_row = np.zeros(nv)
                for i in jct.incoming:
                    a_row[rel * n + i] = 1.0
                coef = cq.backward_wave_speed / cq.length
                g_extra = state_row(q, coef, a_row)
                rows_a.append(a_row)
                rows_g.append(cq.backward_wave_speed * cq.jam_density - g_extra)
                s_row = np.zeros(n)
                s_row[q] = -coef
                rows_s.append(s_row)
                labels.append(("merge_supply", j_abs, jct.incoming))

                a_row2 = np.zeros(nv)
                for i in jct.incoming:
                    a_row2[rel * n + i] = 1.0
                rows_a.append(a_row2)
                rows_g.append(cq.capacity)
                rows_s.append(np.zeros(n))
                labels.append(("merge_capacity", j_abs, jct.incoming))

    a = np.array(rows_a).reshape(len(rows_a), nv) if rows_a else np.zeros((0, nv))
    g_vec = np.asarray(rows_g, dtype=float)
    s_mat = (np.array(rows_s).reshape(len(rows_s), n)
             if rows_s else np.zeros((0, n)))
    return HorizonLp(c=c, a=a, g_vec=g_vec, s_mat=s_mat, ub=ub_full,
                     g_offset=cost_constant(net, cost, k, xk, lam),
                     k=k, horizon=big_n, n_block=n, row_labels=labels)


def centralized_action(net: NetworkGraph, cost: LinearCost, k: int,
                       xk: np.ndarray, lam: InflowProfile | None = None,
                       tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """First control block of the horizon-[k, N] optimum at state x^k."""
    if k >= cost.horizon:
        raise ValueError(f"no control defined at step {k} of horizon {cost.horizon}")
    hlp = build_horizon_lp(net, cost, k, xk, lam)
    sol = hlp.solve(xk, tol=tol).require_optimal()
    return hlp.first_block(sol.z)


def synthesize_explicit(net: NetworkGraph, cost: LinearCost,
                        lam: InflowProfile | None = None,
                        theta_box: Polyhedron | None = None,
                        tol: Tolerances = DEFAULT_TOL,
                        **mplp_kwargs) -> list[PwaFeedbackLaw]:
    """Explicit pwa feedback laws, one per step k, via N parametric solves."""
    if theta_box is None:
        hi = net.state_upper()
        if not np.all(np.isfinite(hi)):
            raise ValueError(
                "network has unbounded on-ramp states; pass an explicit theta_box")
        theta_box = Polyhedron.box(np.zeros(net.n_cells), hi)
    laws = []
    for k in range(cost.horizon):
        hlp = build_horizon_lp(net, cost, k, np.zeros(net.n_cells), lam)
        laws.append(solve_mplp(hlp.to_parametric(theta_box), tol=tol, **mplp_kwargs))
    return laws


def trivial_action(net: NetworkGraph, x: np.ndarray) -> np.ndarray:
    """Every outflow at its upper limit; merge inflows scaled proportionally
    when their shared supply row binds."""
    fb = flow_bounds(net, x)
    u = fb.upper.copy()
    for grp in fb.merge_groups:
        tot = float(sum(u[i] for i in grp.cells))
        if tot > grp.bound:
            factor = grp.bound / tot if tot > 0 else 0.0
            for i in grp.cells:
                u[i] *= factor
    return u


@dataclass(frozen=True)
class Condition:
    name: str
    passed: bool
    details: str = ""


@dataclass(frozen=True)
class ConditionReport:
    conditions: tuple[Condition, ...]

    @property
    def all_passed(self) -> bool:
        return all(c.passed for c in self.conditions)

    def __getitem__(self, name: str) -> Condition:
        for c in self.conditions:
            if c.name == name:
                return c
        raise KeyError(name)

    def __str__(self) -> str:
        return "\n".join(
            f"{'PASS' if c.passed else 'FAIL'}  {c.name}"
            + (f": {c.details}" if c.details else "")
            for c in self.conditions)


def check_thm3_conditions(net: NetworkGraph, cost: LinearCost) -> ConditionReport:
    """Sufficient conditions under which trivial control is truly optimal:
    merge-free topology, time-invariant split ratios, state weights
    non-increasing downstream, control weights nonpositive and
    non-decreasing in time."""
    merges = [j for j in net.junctions() if len(j.incoming) > 1]
    cond_a = Condition(
        "no_merge_junction", not merges,
        "" if not merges else f"merge junctions: {[j.incoming for j in merges]}")

    cond_b = Condition(
        "time_invariant_split_ratios", True,
        "structural: the data model stores a single ratio matrix")

    bad_edges = []
    if np.any(cost.alpha < 0):
        bad_edges.append("negative alpha")
    for i in range(net.n_cells):
        for s in net.successors(i):
            if np.any(cost.alpha[:, i] < cost.alpha[:, s] - 1e-12):
                bad_edges.append(f"alpha[{i}] < alpha[{s}]")
    cond_c = Condition("alpha_downstream_nonincreasing", not bad_edges,
                       "; ".join(bad_edges))

    bad_beta = []
    if np.any(cost.beta > 1e-12):
        bad_beta.append("positive beta")
    if cost.horizon > 1 and np.any(np.diff(cost.beta, axis=0) < -1e-12):
        bad_beta.append("beta decreasing in time")
    cond_d = Condition("beta_nonpositive_nondecreasing", not bad_beta,
                       "; ".join(bad_beta))

    return ConditionReport((cond_a, cond_b, cond_c, cond_d))


def local_subproblem(net: NetworkGraph, cost: LinearCost, i: int):
    """One-hop sub-network of cell i: the cell plus its information set D_i,
    with inflow to cell i forced to zero and every row that would reference
    a non-local state dropped by construction.

    Cells are ordered canonically (sorted), not with i first: the incoming
    cells of a merge junction share the same information set, so their
    local problems become byte-identical and the deterministic solver
    returns the same joint allocation to each of them.  That is what makes
    the separately-assembled merge flows respect the shared supply row.

    Returns (subnet, subcost, local_cells).
    """
    from .network import neighborhoods

    _, _, d_i = neighborhoods(net, i)
    local_cells = sorted({i, *d_i})
    pos = {c: a for a, c in enumerate(local_cells)}
    n_loc = len(local_cells)
    r_loc = np.zeros((n_loc, n_loc))
    for a, ca in enumerate(local_cells):
        for cb in net.successors(ca):
            if cb in pos:
                r_loc[a, pos[cb]] = net.split_ratios[ca, cb]
    r_loc[:, pos[i]] = 0.0  # zero inflow to cell i
    on_loc = [a for a in range(n_loc) if not np.any(r_loc[:, a] > 0)]
    off_loc = [a for a in range(n_loc) if not np.any(r_loc[a] > 0)]
    subnet = NetworkGraph(
        cells=[net.cells[cidx] for cidx in local_cells],
        split_ratios=r_loc,
        on_ramps=on_loc,
        off_ramps=off_loc,
        sampling_time=net.sampling_time,
    )
    return subnet, cost.restrict(local_cells), local_cells


def decentralized_onehop_action(net: NetworkGraph, cost: LinearCost, k: int,
                                xk: np.ndarray,
                                tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Assemble u^k from per-cell local horizon LPs (one-hop information).

    Each cell's local problem spans [k, N] on its sub-network; only the
    cell's own first-step control is kept, the neighbors' solutions are
    discarded.  The assembled action is feasible for the full network.
    """
    if k >= cost.horizon:
        raise ValueError(f"no control defined at step {k} of horizon {cost.horizon}")
    xk = np.asarray(xk, dtype=float)
    u = np.zeros(net.n_cells)
    for i in range(net.n_cells):
        subnet, subcost, local_cells = local_subproblem(net, cost, i)
        x_loc = xk[local_cells]
        hlp = build_horizon_lp(subnet, subcost, k, x_loc, lam=None)
        sol = hlp.solve(x_loc, tol=tol).require_optimal()
        u[i] = hlp.first_block(sol.z)[local_cells.index(i)]
    return u


# ---------------------------------------------------------------------------
# Cost file I/O
# ---------------------------------------------------------------------------

def cost_from_dict(data: dict, n_cells: int) -> LinearCost:
    """Weights given as a scalar, a per-cell vector, or a full per-step table."""
    horizon = int(data["horizon"])

    def expand(raw, rows):
        arr = np.asarray(raw, dtype=float)
        if arr.ndim == 0:
            return np.full((rows, n_cells), float(arr))
        if arr.ndim == 1:
            if arr.size != n_cells:
                raise ValueError(f"weight vector has {arr.size} entries for "
                                 f"{n_cells} cells")
            return np.tile(arr, (rows, 1))
        if arr.shape != (rows, n_cells):
            raise ValueError(f"weight table must be ({rows}, {n_cells})")
        return arr

    alpha = expand(data.get("alpha", 0.0), horizon + 1)
    beta = expand(data.get("beta", 0.0), horizon) if horizon else np.zeros((0, n_cells))
    return LinearCost(alpha=alpha, beta=beta, horizon=horizon)


def load_cost(path, n_cells: int) -> LinearCost:
    with open(path) as fh:
        return cost_from_dict(json.load(fh), n_cells)
