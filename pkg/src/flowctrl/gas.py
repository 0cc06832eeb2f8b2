"""Gas pipeline optimal control on line networks.

Pressures follow x' = x + tau (inflow - outflow); the nonconvex
flow-pressure rule  u^2 <= kappa^2 (x_up^2 - x_down^2)  is handled two ways:

* LP1 replaces it by the conservative linear bound
  u <= kappa (x_up - x_down), valid because drops are nonnegative and
  pressures positive; every LP1 solution is feasible for the original
  constraints and is the one executed;
* LP2 is the separable-programming approximation: each squared term is
  sampled on a breakpoint grid and replaced by a convex combination of
  samples, giving an approximate global-optimum value used solely to
  price LP1's conservatism (its optimizer may be infeasible and is never
  applied).

Flows are indexed 0..n: flow 0 is the purchased network inlet, flow j
feeds cell j (0-based), flow n is the fixed consumer demand.  Valve
parameters kappa/delta sit with their upstream cell.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .horizon import HorizonLp
from .simplex import InfeasibleError, LinearProgram, solve_lp
from .tolerances import DEFAULT_TOL, Tolerances


@dataclass(frozen=True)
class GasLineNetwork:
    """Line pipeline with bounds, pricing and the exogenous demand scenario.

    Arrays are per cell (tau, kappa, delta, x_min, x_max) or per flow
    (u_min, u_max: n+1 entries).  demand has horizon entries,
    output_pressure horizon+1, price horizon, drop_weights
    (horizon+1, n).
    """

    tau: np.ndarray
    kappa: np.ndarray
    delta: np.ndarray
    u_min: np.ndarray
    u_max: np.ndarray
    x_min: np.ndarray
    x_max: np.ndarray
    demand: np.ndarray
    output_pressure: np.ndarray
    price: np.ndarray
    drop_weights: np.ndarray
    horizon: int
    x0: np.ndarray

    def __post_init__(self):
        def arr(name, value, shape):
            a = np.asarray(value, dtype=float) + np.zeros(shape)
            object.__setattr__(self, name, a)
            return a

        tau = np.atleast_1d(np.asarray(self.tau, dtype=float))
        n = tau.size
        object.__setattr__(self, "tau", tau)
        arr("kappa", self.kappa, n)
        arr("delta", self.delta, n)
        arr("u_min", self.u_min, n + 1)
        arr("u_max", self.u_max, n + 1)
        x_min = arr("x_min", self.x_min, n)
        x_max = arr("x_max", self.x_max, n)
        big_n = int(self.horizon)
        arr("demand", self.demand, big_n)
        arr("output_pressure", self.output_pressure, big_n + 1)
        arr("price", self.price, big_n)
        alpha = np.asarray(self.drop_weights, dtype=float)
        if alpha.ndim <= 1:
            alpha = alpha + np.zeros((big_n + 1, n))
        object.__setattr__(self, "drop_weights", alpha)
        arr("x0", self.x0, n)

        if np.any(self.tau <= 0) or np.any(self.kappa <= 0):
            raise ValueError("tau and kappa must be positive")
        if np.any(self.delta < 0):
            raise ValueError("valve drop limits must be nonnegative")
        if np.any(x_min <= 0) or np.any(x_min > x_max):
            raise ValueError("pressure bounds must satisfy 0 < x_min <= x_max")
        if np.any(self.u_min < 0) or np.any(self.u_min > self.u_max):
            raise ValueError("flow bounds must satisfy 0 <= u_min <= u_max")
        if np.any(self.price < 0) or np.any(alpha < 0):
            raise ValueError("price and drop weights must be nonnegative")

    @property
    def n_cells(self) -> int:
        return self.tau.size

    def downstream_pressure(self, a: int, t: int, x_row: np.ndarray) -> float:
        """Pressure below cell a at time t (next cell or network outlet)."""
        if a + 1 < self.n_cells:
            return float(x_row[a + 1])
        return float(self.output_pressure[t])


def validate_initial_state(gas: GasLineNetwork, k: int, xk: np.ndarray) -> list[str]:
    """Pressure-box and drop violations of the given state at time k."""
    xk = np.asarray(xk, dtype=float)
    bad = []
    for a in range(gas.n_cells):
        if not gas.x_min[a] - 1e-9 <= xk[a] <= gas.x_max[a] + 1e-9:
            bad.append(f"x[{a}] = {xk[a]:g} outside [{gas.x_min[a]:g}, {gas.x_max[a]:g}]")
        drop = xk[a] - gas.downstream_pressure(a, k, xk)
        if drop < -1e-9 or drop > gas.delta[a] + 1e-9:
            bad.append(f"drop at cell {a} is {drop:g}, limit [0, {gas.delta[a]:g}]")
    return bad


def _affine_states(gas: GasLineNetwork, k: int, xk: np.ndarray, lo: int, hi: int,
                   dec_flows: list[int], steps: int):
    """Affine expansion of local pressures in the decision flows.

    Returns coef[t_rel][a] over (steps, n_dec) plus const[t_rel][a]; theta
    dependence is the identity on the window cells.
    """
    n_dec = len(dec_flows)
    pos = {f: p for p, f in enumerate(dec_flows)}
    width = hi - lo + 1
    coef = np.zeros((steps + 1, width, steps, n_dec))
    const = np.zeros((steps + 1, width))
    for rel in range(steps):
        t = k + rel
        coef[rel + 1] = coef[rel]
        const[rel + 1] = const[rel]
        for a in range(lo, hi + 1):
            ai = a - lo
            for f, sgn in ((a, 1.0), (a + 1, -1.0)):
                if f in pos:
                    coef[rel + 1, ai, rel, pos[f]] += sgn * gas.tau[a]
                elif f == gas.n_cells:
                    const[rel + 1, ai] += sgn * gas.tau[a] * gas.demand[t]
                # flows outside the window and not decisions are zero
    return coef, const


def _build_lp1_window(gas: GasLineNetwork, k: int, xk: np.ndarray,
                      lo: int, hi: int, zero_inflow: bool) -> HorizonLp:
    """LP1 over cells [lo, hi] with controls u^k..u^{N-1}.

    The full problem is the window [0, n-1]; one-hop local problems use a
    two-cell (or single-cell) window with the upstream inflow pinned to
    zero and every row that would read a pressure outside the window
    dropped.  theta is the window's initial pressure vector.
    """
    n = gas.n_cells
    big_n = gas.horizon
    if not 0 <= k < big_n:
        raise ValueError(f"start step {k} outside horizon [0, {big_n})")
    xk = np.asarray(xk, dtype=float)
    width = hi - lo + 1
    if xk.size != width:
        raise ValueError(f"state has {xk.size} entries for window of {width} cells")

    for t in range(k, big_n):
        if not gas.u_min[n] - 1e-9 <= gas.demand[t] <= gas.u_max[n] + 1e-9:
            raise InfeasibleError(
                f"demand {gas.demand[t]:g} at step {t} outside flow bounds "
                f"[{gas.u_min[n]:g}, {gas.u_max[n]:g}]")

    # decision flows: window boundary flows except pinned/fixed ones
    dec_flows = []
    for f in range(lo, hi + 2):
        if f == gas.n_cells:
            continue  # fixed demand
        if zero_inflow and f == lo:
            continue  # pinned upstream inflow
        dec_flows.append(f)
    n_dec = len(dec_flows)
    steps = big_n - k
    nv = n_dec * steps
    coef, const = _affine_states(gas, k, xk, lo, hi, dec_flows, steps)

    def x_term(rel, a):
        """(control-coef flat, const, theta unit index) of x_a at k+rel."""
        return coef[rel, a - lo].reshape(nv), const[rel, a - lo], a - lo

    rows_a, rows_g, rows_s, labels = [], [], [], []

    def add_row(a_row, g_val, s_row, label):
        rows_a.append(a_row)
        rows_g.append(g_val)
        rows_s.append(s_row)
        labels.append(label)

    local = lambda a: lo <= a <= hi  # noqa: E731

    for rel in range(steps):
        t = k + rel
        for a in range(lo, hi + 1):
            # flow-pressure row of the valve draining cell a: flow a+1
            f = a + 1
            down_local = local(a + 1) or a == n - 1
            if not down_local:
                continue
            a_row = np.zeros(nv)
            s_row = np.zeros(width)
            cu, cc, ti = x_term(rel, a)
            a_row -= gas.kappa[a] * cu
            g_val = gas.kappa[a] * cc
            s_row[ti] += gas.kappa[a]
            if a + 1 <= hi:
                cu2, cc2, ti2 = x_term(rel, a + 1)
                a_row += gas.kappa[a] * cu2
                g_val -= gas.kappa[a] * cc2
                s_row[ti2] -= gas.kappa[a]
            else:
                g_val -= gas.kappa[a] * gas.output_pressure[t]
            if f in dec_flows:
                a_row[rel * n_dec + dec_flows.index(f)] += 1.0
            else:
                g_val -= gas.demand[t]
            add_row(a_row, g_val, s_row, ("flow_pressure", t, a))

    for rel in range(1, steps + 1):
        t = k + rel
        for a in range(lo, hi + 1):
            down_local = local(a + 1) or a == n - 1
            cu, cc, ti = x_term(rel, a)
            # pressure box
            s_hi = np.zeros(width)
            s_hi[ti] = -1.0
            add_row(cu.copy(), gas.x_max[a] - cc, s_hi, ("pressure_max", t, a))
            s_lo = np.zeros(width)
            s_lo[ti] = 1.0
            add_row(-cu, cc - gas.x_min[a], s_lo, ("pressure_min", t, a))
            if not down_local:
                continue
            # valve drop rows 0 <= x_a - x_down <= delta_a
            a_row = cu.copy()
            g_val = gas.delta[a] - cc
            s_row = np.zeros(width)
            s_row[ti] = -1.0
            if a + 1 <= hi:
                cu2, cc2, ti2 = x_term(rel, a + 1)
                a_row = a_row - cu2
                g_val += cc2
                s_row[ti2] = 1.0
            else:
                g_val += gas.output_pressure[t]
            add_row(a_row, g_val, s_row, ("drop_max", t, a))
            add_row(-a_row, -(g_val - gas.delta[a]), -s_row, ("drop_min", t, a))

    # objective: purchases (if the inlet is a decision) plus weighted drops
    c = np.zeros(nv)
    g_offset = 0.0
    if 0 in dec_flows:
        p0 = dec_flows.index(0)
        for rel in range(steps):
            c[rel * n_dec + p0] += gas.price[k + rel]
    for rel in range(steps + 1):
        t = k + rel
        for a in range(lo, hi + 1):
            if not (local(a + 1) or a == n - 1):
                continue
            w = gas.drop_weights[t, a]
            if w == 0.0:
                continue
            cu, cc, _ = x_term(rel, a)
            c += w * cu
            g_offset += w * (cc + xk[a - lo])
            if a + 1 <= hi:
                cu2, cc2, _ = x_term(rel, a + 1)
                c -= w * cu2
                g_offset -= w * (cc2 + xk[a + 1 - lo])
            else:
                g_offset -= w * gas.output_pressure[t]

    lb = np.tile(gas.u_min[dec_flows], steps)
    ub = np.tile(gas.u_max[dec_flows], steps)
    a_mat = np.array(rows_a).reshape(len(rows_a), nv) if rows_a else np.zeros((0, nv))
    s_mat = (np.array(rows_s).reshape(len(rows_s), width)
             if rows_s else np.zeros((0, width)))
    hlp = HorizonLp(c=c, a=a_mat, g_vec=np.asarray(rows_g, dtype=float),
                    s_mat=s_mat, ub=ub, lb=lb,
                    g_offset=g_offset, k=k, horizon=big_n, n_block=n_dec,
                    row_labels=labels)
    hlp.dec_flows = dec_flows  # window metadata for extraction
    return hlp


def build_lp1(gas: GasLineNetwork, k: int, xk: np.ndarray) -> HorizonLp:
    """Convexified horizon LP with the linearized flow-pressure rows.

    Raises InfeasibleError when the fixed demand violates its flow bounds
    (with the binding step); an initial state outside the pressure/drop
    constraints is a precondition violation.
    """
    bad = validate_initial_state(gas, k, xk)
    if bad:
        raise ValueError("initial state infeasible: " + bad[0])
    return _build_lp1_window(gas, k, np.asarray(xk, dtype=float),
                             0, gas.n_cells - 1, zero_inflow=False)


def gas_centralized_action(gas: GasLineNetwork, k: int, xk: np.ndarray,
                           tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """First block of the LP1 optimum: flows 0..n-1 to apply at step k."""
    hlp = build_lp1(gas, k, xk)
    sol = hlp.solve(xk, tol=tol).require_optimal()
    return hlp.first_block(sol.z)


def gas_decentralized_action(gas: GasLineNetwork, k: int, xk: np.ndarray,
                             tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """One-hop decentralized flows: per valve, a local LP1 over the valve's
    upstream/downstream cells with zero upstream inflow; only the valve's
    own first-step flow is kept."""
    n = gas.n_cells
    xk = np.asarray(xk, dtype=float)
    u = np.zeros(n)
    for f in range(n):
        if f == 0:
            lo, hi, zero_in = 0, 0, False
        else:
            lo, hi, zero_in = f - 1, f, True
        try:
            hlp = _build_lp1_window(gas, k, xk[lo:hi + 1], lo, hi, zero_in)
            sol = hlp.solve(xk[lo:hi + 1], tol=tol).require_optimal()
        except InfeasibleError as exc:
            raise InfeasibleError(f"valve {f}: {exc}") from exc
        u[f] = sol.z[hlp.dec_flows.index(f)]
    return u


# ---------------------------------------------------------------------------
# LP2: separable-programming approximation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BreakpointGrid:
    """Breakpoints per nonlinearly-appearing variable.

    flow_grids[j] spans [u_min[j], u_max[j]] for interior flows
    (j = 1..n-1); pressure_grids[a] spans [x_min[a], x_max[a]].  Grids are
    strictly increasing with endpoints equal to the bounds.
    """

    flow_grids: tuple
    pressure_grids: tuple

    def __post_init__(self):
        for g in list(self.flow_grids) + list(self.pressure_grids):
            if g is None:
                continue
            if g.size < 2 or np.any(np.diff(g) <= 0):
                raise ValueError("breakpoint grids must be strictly increasing, m >= 2")

    @classmethod
    def uniform(cls, gas: GasLineNetwork, m: int) -> "BreakpointGrid":
        if m < 2:
            raise ValueError("need at least the two endpoint breakpoints")
        flows = [None] * (gas.n_cells + 1)
        for j in range(1, gas.n_cells):
            flows[j] = np.linspace(gas.u_min[j], gas.u_max[j], m)
        pressures = [np.linspace(gas.x_min[a], gas.x_max[a], m)
                     for a in range(gas.n_cells)]
        return cls(tuple(flows), tuple(pressures))

    def check_spans(self, gas: GasLineNetwork) -> None:
        for j in range(1, gas.n_cells):
            g = self.flow_grids[j]
            if g is None or abs(g[0] - gas.u_min[j]) > 1e-9 or abs(g[-1] - gas.u_max[j]) > 1e-9:
                raise ValueError(f"flow grid {j} does not span its bounds")
        for a in range(gas.n_cells):
            g = self.pressure_grids[a]
            if abs(g[0] - gas.x_min[a]) > 1e-9 or abs(g[-1] - gas.x_max[a]) > 1e-9:
                raise ValueError(f"pressure grid {a} does not span its bounds")


@dataclass
class GasAlp:
    """Approximate LP in interpolation-weight space, plus bookkeeping to
    recover physical variables and to bound the interpolation error."""

    lp: LinearProgram
    g_offset: float
    gas: GasLineNetwork
    k: int
    blocks: dict            # name -> (column slice, breakpoint vector)
    plain_inlet: dict       # t -> column of flow 0
    row_gap: np.ndarray     # per-inequality-row chord-gap bound
    row_labels: list

    def solve(self, tol: Tolerances = DEFAULT_TOL):
        return solve_lp(self.lp, tol=tol)

    def objective_value(self, sol) -> float:
        return self.g_offset + sol.objective

    def recover(self, sol) -> dict:
        """Physical variables implied by the interpolation weights."""
        out = {}
        for name, (cols, grid) in self.blocks.items():
            out[name] = float(sol.z[cols] @ grid)
        for t, col in self.plain_inlet.items():
            out[("u", 0, t)] = float(sol.z[col])
        return out

    def error_bound(self, sol) -> float:
        """First-order bound on the objective error from chord interpolation:
        sum over rows of |dual| * (worst chord gap in that row), doubled for
        safety, plus a small absolute floor."""
        duals = np.abs(sol.duals_ub) if sol.duals_ub is not None else 0.0
        return 2.0 * float(np.sum(duals * self.row_gap)) + 1e-9


def build_lp2(gas: GasLineNetwork, k: int, xk: np.ndarray,
              grid: BreakpointGrid) -> GasAlp:
    """Separable-programming ALP of the nonconvex program.

    Every squared term is evaluated at the breakpoints and the variable is
    replaced by a convex combination of them (weights sum to one); linear
    terms pass through the same representation, dynamics become equality
    rows on it, and variable boxes hold automatically because the grids
    span the bounds.  No adjacency restriction is imposed.
    """
    grid.check_spans(gas)
    bad = validate_initial_state(gas, k, xk)
    if bad:
        raise ValueError("initial state infeasible: " + bad[0])
    xk = np.asarray(xk, dtype=float)
    n = gas.n_cells
    big_n = gas.horizon
    steps = big_n - k

    for t in range(k, big_n):
        if not gas.u_min[n] - 1e-9 <= gas.demand[t] <= gas.u_max[n] + 1e-9:
            raise InfeasibleError(
                f"demand {gas.demand[t]:g} at step {t} outside flow bounds")

    blocks: dict = {}
    plain_inlet: dict = {}
    ncols = 0
    for t in range(k, big_n):
        plain_inlet[t] = ncols
        ncols += 1
    for t in range(k, big_n):
        for j in range(1, n):
            g = grid.flow_grids[j]
            blocks[("u", j, t)] = (slice(ncols, ncols + g.size), g)
            ncols += g.size
    for t in range(k + 1, big_n + 1):
        for a in range(n):
            g = grid.pressure_grids[a]
            blocks[("x", a, t)] = (slice(ncols, ncols + g.size), g)
            ncols += g.size

    lb = np.zeros(ncols)
    ub = np.full(ncols, np.inf)
    for t in range(k, big_n):
        lb[plain_inlet[t]] = gas.u_min[0]
        ub[plain_inlet[t]] = gas.u_max[0]
    for cols, _ in blocks.values():
        ub[cols] = 1.0

    def lin(row, name, coef, t):
        """Add coef * (variable value) to a row; returns the constant part."""
        kind, idx = name
        if kind == "u":
            if idx == 0:
                row[plain_inlet[t]] += coef
                return 0.0
            if idx == n:
                return coef * gas.demand[t]
            cols, g = blocks[("u", idx, t)]
            row[cols] += coef * g
            return 0.0
        if t == k:
            return coef * xk[idx]
        cols, g = blocks[("x", idx, t)]
        row[cols] += coef * g
        return 0.0

    def sq(row, name, coef, t):
        """Add coef * (variable value)^2; returns (constant, chord gap bound)."""
        kind, idx = name
        if kind == "u":
            if idx == n:
                return coef * gas.demand[t] ** 2, 0.0
            cols, g = blocks[("u", idx, t)]
        else:
            if t == k:
                return coef * xk[idx] ** 2, 0.0
            cols, g = blocks[("x", idx, t)]
        row[cols] += coef * g ** 2
        gap = abs(coef) * float(np.max(np.diff(g)) ** 2) / 4.0
        return 0.0, gap

    a_eq, b_eq = [], []
    for cols, _ in blocks.values():
        row = np.zeros(ncols)
        row[cols] = 1.0
        a_eq.append(row)
        b_eq.append(1.0)
    for t in range(k, big_n):
        for a in range(n):
            # x_a^{t+1} - x_a^t - tau_a (u_a^t - u_{a+1}^t) = 0
            row = np.zeros(ncols)
            c1 = lin(row, ("x", a), 1.0, t + 1)
            c2 = lin(row, ("x", a), -1.0, t)
            c3 = lin(row, ("u", a), -gas.tau[a], t)
            c4 = lin(row, ("u", a + 1), gas.tau[a], t)
            a_eq.append(row)
            b_eq.append(-(c1 + c2 + c3 + c4))

    a_ub, b_ub, gaps, labels = [], [], [], []
    for t in range(k, big_n):
        for a in range(n):
            row = np.zeros(ncols)
            const = 0.0
            gap = 0.0
            cv, gv = sq(row, ("u", a + 1), 1.0, t)
            const += cv
            gap += gv
            cv, gv = sq(row, ("x", a), -gas.kappa[a] ** 2, t)
            const += cv
            gap += gv
            if a + 1 < n:
                cv, gv = sq(row, ("x", a + 1), gas.kappa[a] ** 2, t)
                const += cv
                gap += gv
            else:
                const += gas.kappa[a] ** 2 * gas.output_pressure[t] ** 2
            a_ub.append(row)
            b_ub.append(-const)
            gaps.append(gap)
            labels.append(("flow_pressure", t, a))
    for t in range(k + 1, big_n + 1):
        for a in range(n):
            row = np.zeros(ncols)
            const = lin(row, ("x", a), 1.0, t)
            if a + 1 < n:
                const += lin(row, ("x", a + 1), -1.0, t)
            else:
                const -= gas.output_pressure[t]
            a_ub.append(row.copy())
            b_ub.append(gas.delta[a] - const)
            gaps.append(0.0)
            labels.append(("drop_max", t, a))
            a_ub.append(-row)
            b_ub.append(const)
            gaps.append(0.0)
            labels.append(("drop_min", t, a))

    c = np.zeros(ncols)
    g_offset = 0.0
    for t in range(k, big_n):
        g_offset += lin(c, ("u", 0), gas.price[t], t)
    for t in range(k, big_n + 1):
        for a in range(n):
            w = gas.drop_weights[t, a]
            if w == 0.0:
                continue
            g_offset += lin(c, ("x", a), w, t)
            if a + 1 < n:
                g_offset += lin(c, ("x", a + 1), -w, t)
            else:
                g_offset -= w * gas.output_pressure[t]

    lp = LinearProgram(c=c, a_ub=np.array(a_ub), b_ub=np.array(b_ub),
                       a_eq=np.array(a_eq), b_eq=np.array(b_eq), lb=lb, ub=ub)
    return GasAlp(lp=lp, g_offset=g_offset, gas=gas, k=k, blocks=blocks,
                  plain_inlet=plain_inlet, row_gap=np.asarray(gaps),
                  row_labels=labels)


def solve_lp2_value(gas: GasLineNetwork, k: int, xk: np.ndarray, m: int,
                    tol: Tolerances = DEFAULT_TOL):
    """Objective value of the m-breakpoint ALP plus its error bound."""
    alp = build_lp2(gas, k, xk, BreakpointGrid.uniform(gas, m))
    sol = alp.solve(tol=tol).require_optimal()
    return alp.objective_value(sol), alp.error_bound(sol)


# ---------------------------------------------------------------------------
# Rollout, feasibility audit, gap
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GasViolation:
    step: int
    kind: str
    magnitude: float

    def __str__(self):
        return f"step {self.step}: {self.kind} violated by {self.magnitude:.3g}"


@dataclass(frozen=True)
class FeasibilityReport:
    violations: tuple[GasViolation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations


def check_feasibility_nonconvex(gas: GasLineNetwork, states: np.ndarray,
                                flows: np.ndarray, tol: float = 1e-7) -> FeasibilityReport:
    """Audit a trajectory against the original nonconvex constraint set:
    quadratic flow-pressure rows, drop limits, and both box families."""
    states = np.asarray(states, dtype=float)
    flows = np.asarray(flows, dtype=float)
    big_n = flows.shape[0]
    n = gas.n_cells
    out = []
    for t in range(big_n + 1):
        for a in range(n):
            x = states[t, a]
            if x < gas.x_min[a] - tol or x > gas.x_max[a] + tol:
                out.append(GasViolation(t, f"pressure box cell {a}",
                                        max(gas.x_min[a] - x, x - gas.x_max[a])))
            down = gas.downstream_pressure(a, t, states[t])
            drop = x - down
            if drop < -tol:
                out.append(GasViolation(t, f"monotone pressure cell {a}", -drop))
            if drop > gas.delta[a] + tol:
                out.append(GasViolation(t, f"drop limit cell {a}", drop - gas.delta[a]))
    for t in range(big_n):
        for j in range(n + 1):
            u = flows[t, j]
            if u < gas.u_min[j] - tol or u > gas.u_max[j] + tol:
                out.append(GasViolation(t, f"flow box {j}",
                                        max(gas.u_min[j] - u, u - gas.u_max[j])))
        for a in range(n):
            u = flows[t, a + 1]
            down = gas.downstream_pressure(a, t, states[t])
            rhs = gas.kappa[a] ** 2 * (states[t, a] ** 2 - down ** 2)
            if u ** 2 > rhs + tol * max(1.0, abs(rhs)):
                out.append(GasViolation(t, f"flow-pressure valve {a}", u ** 2 - rhs))
    return FeasibilityReport(tuple(out))


def suboptimality_gap(j_lp1: float, j_lp2: float) -> float:
    """Relative conservatism of LP1 priced against the LP2 value."""
    return (j_lp1 - j_lp2) / max(1.0, abs(j_lp2))


@dataclass
class GasTrajectory:
    states: np.ndarray            # (N+1, n) pressures
    flows: np.ndarray             # (N, n+1) applied flows incl. demand
    stage_costs: np.ndarray
    terminal_cost: float
    total_cost: float
    scheme: str = ""
    feasibility: FeasibilityReport | None = None

    @property
    def horizon(self) -> int:
        return self.flows.shape[0]


GAS_SCHEMES = ("lp1-centralized", "lp1-decentralized")


def simulate_gas(gas: GasLineNetwork, scheme, x0=None,
                 tol: Tolerances = DEFAULT_TOL) -> GasTrajectory:
    """Closed-loop pipeline rollout under an LP1-based controller."""
    if callable(scheme):
        control = scheme
        name = getattr(scheme, "__name__", "custom")
    elif scheme in ("lp1-centralized", "centralized"):
        control = gas_centralized_action
        name = "lp1-centralized"
    elif scheme in ("lp1-decentralized", "decentralized"):
        control = gas_decentralized_action
        name = "lp1-decentralized"
    else:
        raise ValueError(f"unknown gas scheme {scheme!r}; expected {GAS_SCHEMES}")

    n = gas.n_cells
    big_n = gas.horizon
    x = np.asarray(gas.x0 if x0 is None else x0, dtype=float).copy()
    states = np.zeros((big_n + 1, n))
    flows = np.zeros((big_n, n + 1))
    stage = np.zeros(big_n)
    states[0] = x

    def drops(t, row):
        return np.array([row[a] - gas.downstream_pressure(a, t, row)
                         for a in range(n)])

    for t in range(big_n):
        u = np.asarray(control(gas, t, x), dtype=float)
        full = np.concatenate([u, [gas.demand[t]]])
        stage[t] = float(gas.price[t] * full[0]
                         + gas.drop_weights[t] @ drops(t, x))
        x = x + gas.tau * (full[:n] - full[1:])
        flows[t] = full
        states[t + 1] = x
    terminal = float(gas.drop_weights[big_n] @ drops(big_n, x))
    total = float(stage.sum() + terminal)
    report = check_feasibility_nonconvex(gas, states, flows)
    return GasTrajectory(states=states, flows=flows, stage_costs=stage,
                         terminal_cost=terminal, total_cost=total,
                         scheme=name, feasibility=report)


def gas_trajectory_to_csv(traj: GasTrajectory, gas: GasLineNetwork) -> str:
    """Long-format trace: per (step, cell) pressure, inflow, outflow and
    the per-cell drop charge; purchases appear on cell 1's rows."""
    n = gas.n_cells
    lines = ["k,cell,x,u_in,u_out,stage_cost"]

    def fmt(v):
        return f"{v:.17g}"

    for t in range(traj.horizon):
        for a in range(n):
            drop = traj.states[t, a] - gas.downstream_pressure(a, t, traj.states[t])
            sc = gas.drop_weights[t, a] * drop
            if a == 0:
                sc += gas.price[t] * traj.flows[t, 0]
            lines.append(f"{t},{a + 1},{fmt(traj.states[t, a])},"
                         f"{fmt(traj.flows[t, a])},{fmt(traj.flows[t, a + 1])},{fmt(sc)}")
    t = traj.horizon
    for a in range(n):
        drop = traj.states[t, a] - gas.downstream_pressure(a, t, traj.states[t])
        lines.append(f"{t},{a + 1},{fmt(traj.states[t, a])},,,"
                     f"{fmt(gas.drop_weights[t, a] * drop)}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Scenario file I/O
# ---------------------------------------------------------------------------

def gas_from_dict(data: dict) -> GasLineNetwork:
    cells = data["cells"]
    return GasLineNetwork(
        tau=[c["tau"] for c in cells],
        kappa=[c["kappa"] for c in cells],
        delta=[c["delta"] for c in cells],
        u_min=[f["u_min"] for f in data["flow_bounds"]],
        u_max=[f["u_max"] for f in data["flow_bounds"]],
        x_min=[c["x_min"] for c in cells],
        x_max=[c["x_max"] for c in cells],
        demand=data["demand"],
        output_pressure=data["output_pressure"],
        price=data["price"],
        drop_weights=data.get("drop_weights", 0.0),
        horizon=int(data["horizon"]),
        x0=data["initial_pressure"],
    )


def gas_to_dict(gas: GasLineNetwork) -> dict:
    return {
        "cells": [
            {"tau": gas.tau[a], "kappa": gas.kappa[a], "delta": gas.delta[a],
             "x_min": gas.x_min[a], "x_max": gas.x_max[a]}
            for a in range(gas.n_cells)
        ],
        "flow_bounds": [
            {"u_min": gas.u_min[j], "u_max": gas.u_max[j]}
            for j in range(gas.n_cells + 1)
        ],
        "demand": gas.demand.tolist(),
        "output_pressure": gas.output_pressure.tolist(),
        "price": gas.price.tolist(),
        "drop_weights": gas.drop_weights.tolist(),
        "horizon": gas.horizon,
        "initial_pressure": gas.x0.tolist(),
    }


def load_gas(path) -> GasLineNetwork:
    with open(path) as fh:
        return gas_from_dict(json.load(fh))


def save_gas(gas: GasLineNetwork, path) -> None:
    with open(path, "w") as fh:
        json.dump(gas_to_dict(gas), fh, indent=2)
        fh.write("\n")
