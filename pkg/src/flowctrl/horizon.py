"""Finite-horizon LP container shared by the traffic and gas builders.

The program is stored with the current state isolated as a parameter:
rows read  a z <= g_vec + s_mat x^k,  plus constant variable bounds.  The
control-independent cost part ``g_offset`` is kept for reporting, so the
total horizon cost is g_offset + LP objective.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .mplp import ParametricLp, Polyhedron
from .simplex import LinearProgram, LpSolution, solve_lp
from .tolerances import DEFAULT_TOL, Tolerances


@dataclass
class HorizonLp:
    c: np.ndarray
    a: np.ndarray
    g_vec: np.ndarray
    s_mat: np.ndarray
    ub: np.ndarray
    g_offset: float
    k: int
    horizon: int
    n_block: int                      # controls per step (first block size)
    lb: np.ndarray | None = None
    row_labels: list[tuple] = field(default_factory=list)

    @property
    def n_steps(self) -> int:
        return self.horizon - self.k

    @property
    def n_vars(self) -> int:
        return self.c.size

    def instantiate(self, xk) -> LinearProgram:
        xk = np.asarray(xk, dtype=float)
        return LinearProgram(c=self.c, a_ub=self.a,
                             b_ub=self.g_vec + self.s_mat @ xk,
                             lb=self.lb, ub=self.ub)

    def to_parametric(self, theta_box: Polyhedron) -> ParametricLp:
        """Expand variable bounds into rows for the basis-enumeration solver."""
        nv = self.n_vars
        eye = np.eye(nv)
        lo = np.zeros(nv) if self.lb is None else self.lb
        fin_lo = np.isfinite(lo)
        fin_hi = np.isfinite(self.ub)
        w = np.vstack([self.a, -eye[fin_lo], eye[fin_hi]])
        g = np.concatenate([self.g_vec, -lo[fin_lo], self.ub[fin_hi]])
        s = np.vstack([self.s_mat,
                       np.zeros((int(fin_lo.sum()) + int(fin_hi.sum()),
                                 self.s_mat.shape[1]))])
        return ParametricLp(c=self.c, w=w, g=g, s=s, omega=theta_box)

    def first_block(self, z: np.ndarray) -> np.ndarray:
        return np.asarray(z[:self.n_block], dtype=float)

    def solve(self, xk, tol: Tolerances = DEFAULT_TOL) -> LpSolution:
        return solve_lp(self.instantiate(xk), tol=tol)
