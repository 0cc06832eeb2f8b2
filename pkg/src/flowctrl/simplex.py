"""Dense linear programming via a bounded-variable two-phase simplex.

The solver certifies optimality through dual feasibility of the final
basis: at termination every reduced cost carries the optimal sign pattern,
and the reported solution is refreshed against the original data through
one step of iterative refinement so primal residuals stay near machine
precision even after long pivot sequences.

Form accepted::

    minimize c'z   s.t.  a_ub z <= b_ub,  a_eq z = b_eq,  lb <= z <= ub

Bounds default to [0, +inf).  Free and upper-bounded-only variables are
handled by column transforms, so callers never pre-shift their data.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from ._simplex_impl import MAXITER, UNBOUNDED, pivot_loop  # noqa: F401
from .tolerances import DEFAULT_TOL, Tolerances


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    MAX_ITERATIONS = "max_iterations"


class LpError(Exception):
    """Base class for solver failures."""


class InfeasibleError(LpError):
    pass


class UnboundedError(LpError):
    pass


class MaxIterationsError(LpError):
    pass


_STATUS_ERRORS = {
    LpStatus.INFEASIBLE: InfeasibleError,
    LpStatus.UNBOUNDED: UnboundedError,
    LpStatus.MAX_ITERATIONS: MaxIterationsError,
}


@dataclass(frozen=True)
class LinearProgram:
    """LP data in inequality standard form with optional equalities/bounds."""

    c: np.ndarray
    a_ub: np.ndarray | None = None
    b_ub: np.ndarray | None = None
    a_eq: np.ndarray | None = None
    b_eq: np.ndarray | None = None
    lb: np.ndarray | None = None
    ub: np.ndarray | None = None

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        object.__setattr__(self, "c", c)
        n = c.size

        def mat(a, b, name):
            if a is None:
                return np.zeros((0, n)), np.zeros(0)
            a = np.atleast_2d(np.asarray(a, dtype=float))
            b = np.atleast_1d(np.asarray(b, dtype=float))
            if a.shape != (b.size, n):
                raise ValueError(
                    f"{name} shape {a.shape} inconsistent with "
                    f"{b.size} rhs entries and {n} variables"
                )
            return a, b

        a_ub, b_ub = mat(self.a_ub, self.b_ub, "a_ub")
        a_eq, b_eq = mat(self.a_eq, self.b_eq, "a_eq")
        lb = np.zeros(n) if self.lb is None else np.asarray(self.lb, dtype=float) + np.zeros(n)
        ub = np.full(n, np.inf) if self.ub is None else np.asarray(self.ub, dtype=float) + np.zeros(n)
        if np.any(lb > ub + 1e-12):
            raise ValueError("lower bound exceeds upper bound")
        for name, val in (("a_ub", a_ub), ("b_ub", b_ub), ("a_eq", a_eq),
                          ("b_eq", b_eq), ("lb", lb), ("ub", ub)):
            object.__setattr__(self, name, val)

    @property
    def n_vars(self) -> int:
        return self.c.size


@dataclass
class LpSolution:
    status: LpStatus
    z: np.ndarray | None
    objective: float
    active_set: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=int))
    duals_ub: np.ndarray | None = None
    duals_eq: np.ndarray | None = None
    iterations: int = 0

    @property
    def optimal(self) -> bool:
        return self.status is LpStatus.OPTIMAL

    def require_optimal(self) -> "LpSolution":
        """Return self, raising the status-specific error if not optimal."""
        if not self.optimal:
            raise _STATUS_ERRORS[self.status](
                f"LP terminated with status {self.status.value}"
            )
        return self


def _reduced_costs(cfull, T, basis):
    d = cfull.copy()
    for r in range(basis.size):
        cb = cfull[basis[r]]
        if cb != 0.0:
            d -= cb * T[r, :]
    return d


def solve_lp(lp: LinearProgram, tol: Tolerances = DEFAULT_TOL,
             max_iter: int | None = None) -> LpSolution:
    """Solve an LP, returning optimizer, objective, active set and duals.

    Duals follow the sensitivity convention for a minimization: relaxing
    b_ub[i] by eps lowers the optimal value by duals_ub[i] * eps, with
    duals_ub >= 0 at an optimum.
    """
    n = lp.n_vars
    lb, ub = lp.lb, lp.ub

    # Column transforms onto [0, span]:
    # kind 0: shift by finite lb; kind 1: mirror about finite ub (lb = -inf);
    # kind 2: free split into positive/negative parts.
    kinds = np.zeros(n, dtype=int)
    kinds[(~np.isfinite(lb)) & np.isfinite(ub)] = 1
    kinds[(~np.isfinite(lb)) & (~np.isfinite(ub))] = 2
    n_split = int(np.sum(kinds == 2))
    nt = n + n_split

    ct = np.zeros(nt)
    span = np.full(nt, np.inf)
    shift = np.zeros(n)
    scale_col = np.ones(n)
    extra = n
    for j in range(n):
        if kinds[j] == 0:
            shift[j] = lb[j]
            ct[j] = lp.c[j]
            span[j] = ub[j] - lb[j]
        elif kinds[j] == 1:
            shift[j] = ub[j]
            scale_col[j] = -1.0
            ct[j] = -lp.c[j]
        else:
            ct[j] = lp.c[j]
            ct[extra] = -lp.c[j]
            extra += 1

    a_all = np.vstack([lp.a_ub, lp.a_eq])
    b_all = np.concatenate([lp.b_ub, lp.b_eq])
    m_ub = lp.b_ub.size
    m = b_all.size
    is_eq = np.zeros(m, dtype=bool)
    is_eq[m_ub:] = True

    at = np.zeros((m, nt))
    at[:, :n] = a_all * scale_col
    extra = n
    for j in range(n):
        if kinds[j] == 2:
            at[:, extra] = -a_all[:, j]
            extra += 1
    bt = b_all - a_all @ shift

    if m == 0:
        zt = np.where(ct >= 0.0, 0.0, span)
        if np.any(~np.isfinite(zt)):
            return LpSolution(LpStatus.UNBOUNDED, None, -np.inf)
        z = _untransform(zt, n, kinds, shift)
        return LpSolution(LpStatus.OPTIMAL, z, float(lp.c @ z),
                          duals_ub=np.zeros(0), duals_eq=np.zeros(0))

    # ---- scaled canonical system and starting basis ---------------------
    n_slack = int(np.sum(~is_eq))
    need_art = is_eq | (bt < 0.0)
    n_art = int(np.sum(need_art))
    ncols = nt + n_slack + n_art

    T = np.zeros((m, ncols))
    T[:, :nt] = at
    col_ub = np.concatenate([span, np.full(n_slack + n_art, np.inf)])
    basis = np.zeros(m, dtype=np.int64)
    vstate = np.zeros(ncols, dtype=np.int64)
    xB = np.zeros(m)
    row_sign = np.ones(m)          # sign applied to row i of the system
    slack_col = np.full(m, -1, dtype=int)
    art_col = np.full(m, -1, dtype=int)

    sidx = nt
    aidx = nt + n_slack
    for i in range(m):
        if not is_eq[i]:
            T[i, sidx] = 1.0
            slack_col[i] = sidx
            sidx += 1
        if need_art[i]:
            sgn = 1.0 if bt[i] >= 0.0 else -1.0
            row_sign[i] = sgn
            T[i, :] *= sgn          # artificial enters with coefficient +1
            T[i, aidx] = 1.0
            art_col[i] = aidx
            basis[i] = aidx
            vstate[aidx] = 2
            xB[i] = abs(bt[i])
            aidx += 1
        else:
            basis[i] = slack_col[i]
            vstate[slack_col[i]] = 2
            xB[i] = bt[i]

    if max_iter is None:
        max_iter = 200 * (m + nt) + 1000
    b_scale = max(1.0, float(np.max(np.abs(bt))))
    iters = 0

    # ---- phase 1 ---------------------------------------------------------
    if n_art > 0:
        c1 = np.zeros(ncols)
        c1[nt + n_slack:] = 1.0
        d1 = _reduced_costs(c1, T, basis)
        code, it1 = pivot_loop(T, xB, basis, vstate, col_ub, d1,
                               tol.optimality, tol.pivot, max_iter)
        iters += it1
        if code == MAXITER:
            return LpSolution(LpStatus.MAX_ITERATIONS, None, np.nan,
                              iterations=iters)
        if code == UNBOUNDED:
            raise LpError("phase-1 objective unbounded: numerical failure")
        infeas = sum(max(xB[i], 0.0) for i in range(m)
                     if basis[i] >= nt + n_slack)
        if infeas > tol.feasibility * b_scale:
            return LpSolution(LpStatus.INFEASIBLE, None, np.nan,
                              iterations=iters)
        col_ub[nt + n_slack:] = 0.0   # pin artificials out of phase 2

    # ---- phase 2 ---------------------------------------------------------
    c2 = np.zeros(ncols)
    c2[:nt] = ct
    d2 = _reduced_costs(c2, T, basis)
    code, it2 = pivot_loop(T, xB, basis, vstate, col_ub, d2,
                           tol.optimality, tol.pivot, max_iter)
    iters += it2
    if code == UNBOUNDED:
        return LpSolution(LpStatus.UNBOUNDED, None, -np.inf, iterations=iters)
    if code == MAXITER:
        return LpSolution(LpStatus.MAX_ITERATIONS, None, np.nan,
                          iterations=iters)

    # ---- refresh solution and duals against the original data -----------
    # Scaled system matrix (the one the tableau was initialized from).
    afull = np.zeros((m, ncols))
    afull[:, :nt] = at
    for i in range(m):
        if slack_col[i] >= 0:
            afull[i, slack_col[i]] = 1.0
        afull[i, :] *= row_sign[i]
        if art_col[i] >= 0:
            afull[i, art_col[i]] = 1.0
    b_scaled = bt * row_sign

    # Unit logical column of each row (artificial preferred: coefficient +1).
    logical = np.where(art_col >= 0, art_col, slack_col)
    binv = T[:, logical]           # B^-1, up to pivot drift

    xt = np.zeros(ncols)
    up = vstate == 1
    xt[up] = col_ub[up]
    xt[basis] = xB
    corr = binv @ (b_scaled - afull @ xt)
    if np.all(np.isfinite(corr)):
        xt[basis] = xB + corr

    zt = xt[:nt]
    z = _untransform(zt, n, kinds, shift)
    objective = float(lp.c @ z)

    # Sensitivity duals: y_scaled solves A_B' y = c_B (read off the logical
    # columns' reduced costs, one refinement pass), then the row scaling is
    # folded back and negated into the relax-lowers-value convention.
    y_scaled = -d2[logical]
    rho = c2[basis] - afull[:, basis].T @ y_scaled
    ycorr = binv.T @ rho
    if np.all(np.isfinite(ycorr)):
        y_scaled = y_scaled + ycorr
    y_sens = -row_sign * y_scaled
    duals_ub = y_sens[:m_ub]
    duals_eq = y_sens[m_ub:]

    if m_ub:
        resid_ub = lp.b_ub - lp.a_ub @ z
        scale = np.maximum(1.0, np.abs(lp.b_ub))
        active = np.where(resid_ub <= tol.feasibility * scale)[0]
    else:
        active = np.zeros(0, dtype=int)

    return LpSolution(LpStatus.OPTIMAL, z, objective, active_set=active,
                      duals_ub=duals_ub, duals_eq=duals_eq, iterations=iters)


def _untransform(zt, n, kinds, shift):
    z = np.zeros(n)
    extra = n
    for j in range(n):
        if kinds[j] == 0:
            z[j] = shift[j] + zt[j]
        elif kinds[j] == 1:
            z[j] = shift[j] - zt[j]
        else:
            z[j] = zt[j] - zt[extra]
            extra += 1
    return z
