"""Pivot kernel for the bounded-variable primal simplex.

This module holds the single hot loop of the package.  The same source is
executed either jit-compiled (numba backend) or interpreted with vectorized
numpy row operations (fallback backend); see ``flowctrl._accel``.

The kernel works on a dense tableau in canonical form

    minimize  c'x   s.t.  rows(T) encode  B^-1 [A | logicals],
    0 <= x_j <= col_ub[j]

where every nonbasic variable rests on one of its bounds.  Equality rows
and infeasible starts are handled by the caller through artificial columns
whose upper bounds get pinned to zero for phase two.

Entering-variable pricing is Dantzig's rule; after a run of degenerate
steps the loop switches permanently to Bland's rule, which guarantees
termination.  Ties in the ratio test prefer the largest pivot magnitude
(Bland mode: the smallest basis index).
"""

from __future__ import annotations

import numpy as np

from ._accel import NUMBA_ENABLED, maybe_njit

# Loop status codes (module-level ints so the jitted code can return them).
OPTIMAL = 0
UNBOUNDED = 2
MAXITER = 3

_DEGEN_SWITCH = 30  # consecutive zero-length steps before Bland's rule
_TIE = 1e-10


def _pivot_loop(T, xB, basis, vstate, col_ub, d, tol_opt, tol_piv, max_iter):
    """Run simplex pivots in place until an optimum is certified.

    T       (m, ncols) current tableau rows B^-1 [A | logicals]
    xB      (m,)       values of the basic variables
    basis   (m,)       column index basic in each row
    vstate  (ncols,)   0 = nonbasic at lower, 1 = nonbasic at upper, 2 = basic
    col_ub  (ncols,)   variable upper bounds (lower bounds are all zero)
    d       (ncols,)   reduced costs for the current objective

    Returns (status, iterations).  All arrays are mutated.
    """
    m, ncols = T.shape
    bland = False
    degen = 0
    it = 0
    while it < max_iter:
        it += 1

        # ---- pricing -------------------------------------------------
        at_lo = (vstate == 0) & (col_ub > 0.0) & (d < -tol_opt)
        at_up = (vstate == 1) & (d > tol_opt)
        if bland:
            improving = np.where(at_lo | at_up)[0]
            if improving.size == 0:
                return OPTIMAL, it - 1
            enter = int(improving[0])
        else:
            scores = np.zeros(ncols)
            scores[at_lo] = -d[at_lo]
            scores[at_up] = d[at_up]
            enter = int(np.argmax(scores))
            if scores[enter] <= 0.0:
                return OPTIMAL, it - 1

        dirn = 1.0 if vstate[enter] == 0 else -1.0
        y = T[:, enter].copy()
        delta = -dirn * y

        # ---- ratio test ----------------------------------------------
        tlo = np.full(m, np.inf)
        mlo = delta < -tol_piv
        tlo[mlo] = np.maximum(xB[mlo], 0.0) / (-delta[mlo])
        bub = col_ub[basis]
        thi = np.full(m, np.inf)
        mhi = (delta > tol_piv) & np.isfinite(bub)
        thi[mhi] = np.maximum(bub[mhi] - xB[mhi], 0.0) / delta[mhi]
        trow = np.minimum(tlo, thi)
        tmin = np.min(trow) if m > 0 else np.inf
        tflip = col_ub[enter]

        if not np.isfinite(tflip) and not np.isfinite(tmin):
            return UNBOUNDED, it

        if tflip <= tmin + 1e-12:
            # bound-to-bound flip, no basis change
            xB -= (dirn * tflip) * y
            vstate[enter] = 1 - vstate[enter]
            step = tflip
        else:
            cand = np.where(trow <= tmin + _TIE)[0]
            if bland:
                r = int(cand[np.argmin(basis[cand])])
            else:
                r = int(cand[np.argmax(np.abs(y[cand]))])
            t = trow[r]
            piv = T[r, enter]
            leave = basis[r]
            vstate[leave] = 0 if delta[r] < 0.0 else 1
            xB -= (dirn * t) * y
            xq = t if dirn > 0.0 else col_ub[enter] - t

            trow_piv = T[r, :] / piv
            T[r, :] = trow_piv
            for i in range(m):
                if i != r:
                    f = T[i, enter]
                    if f != 0.0:
                        T[i, :] -= f * trow_piv
            d -= d[enter] * trow_piv
            d[enter] = 0.0
            basis[r] = enter
            vstate[enter] = 2
            xB[r] = xq
            step = t

        if step > 1e-11:
            degen = 0
        else:
            degen += 1
            if degen >= _DEGEN_SWITCH:
                bland = True
    return MAXITER, it


pivot_loop_numpy = _pivot_loop

if NUMBA_ENABLED:
    pivot_loop = maybe_njit(cache=True)(_pivot_loop)
else:
    pivot_loop = _pivot_loop
