"""Multi-parametric LP: explicit piecewise-affine optimizers by basis enumeration.

For ``min c'z  s.t.  W z <= G + S theta`` with theta ranging over a bounded
polyhedron, every dual-feasible basis B (y_B = -W_B^{-T} c >= 0, a condition
independent of theta) yields the affine optimizer z(theta) = L theta + l with
L = W_B^{-1} S_B, l = W_B^{-1} G_B, optimal exactly on the critical region
where the remaining rows stay primal-feasible.  Enumerating all bases in
lexicographic order therefore covers the feasible parameter set with
polyhedral regions carrying one affine gain each.

Enumeration is exponential in the number of rows, so this solver is guarded
to desk scale; the online controllers never need it (re-solving the LP at
the measured state is pointwise equivalent).
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .simplex import LinearProgram, LpStatus, solve_lp
from .tolerances import DEFAULT_TOL, Tolerances


class ScaleExceededError(Exception):
    """Problem too large for exhaustive basis enumeration."""


class OutOfDomainError(Exception):
    """Parameter lies in no region of the law."""


@dataclass(frozen=True)
class Polyhedron:
    """Halfspace intersection {x : P x <= q}."""

    p: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.p, dtype=float))
        q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if p.shape[0] != q.size:
            raise ValueError("polyhedron rows/rhs mismatch")
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "q", q)

    @classmethod
    def box(cls, lo, hi) -> "Polyhedron":
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        dim = lo.size
        eye = np.eye(dim)
        return cls(np.vstack([eye, -eye]), np.concatenate([hi, -lo]))

    @property
    def dim(self) -> int:
        return self.p.shape[1]

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(self.p @ x <= self.q + tol * np.maximum(1.0, np.abs(self.q))))

    def chebyshev(self):
        """(center, radius) of the largest inscribed ball; radius may be inf."""
        norms = np.linalg.norm(self.p, axis=1)
        dim = self.dim
        c = np.zeros(dim + 1)
        c[-1] = -1.0
        a = np.hstack([self.p, norms[:, None]])
        lb = np.full(dim + 1, -np.inf)
        lb[-1] = 0.0
        sol = solve_lp(LinearProgram(c=c, a_ub=a, b_ub=self.q, lb=lb))
        if sol.status is LpStatus.UNBOUNDED:
            return None, np.inf
        if not sol.optimal:
            return None, -np.inf
        return sol.z[:-1], float(sol.z[-1])


@dataclass(frozen=True)
class ParametricLp:
    """min c'z  s.t.  W z <= G + S theta,  theta in omega."""

    c: np.ndarray
    w: np.ndarray
    g: np.ndarray
    s: np.ndarray
    omega: Polyhedron

    def __post_init__(self):
        c = np.atleast_1d(np.asarray(self.c, dtype=float))
        w = np.atleast_2d(np.asarray(self.w, dtype=float))
        g = np.atleast_1d(np.asarray(self.g, dtype=float))
        s = np.atleast_2d(np.asarray(self.s, dtype=float))
        if w.shape != (g.size, c.size) or s.shape != (g.size, self.omega.dim):
            raise ValueError("inconsistent parametric LP dimensions")
        for name, val in (("c", c), ("w", w), ("g", g), ("s", s)):
            object.__setattr__(self, name, val)

    @property
    def n_vars(self) -> int:
        return self.c.size

    @property
    def n_params(self) -> int:
        return self.omega.dim

    def instantiate(self, theta) -> LinearProgram:
        """Fix the parameter: an ordinary LP with free variables."""
        theta = np.asarray(theta, dtype=float)
        return LinearProgram(c=self.c, a_ub=self.w, b_ub=self.g + self.s @ theta,
                             lb=np.full(self.n_vars, -np.inf))


@dataclass(frozen=True)
class Region:
    h: np.ndarray
    rhs: np.ndarray
    gain: np.ndarray    # L
    offset: np.ndarray  # l
    basis: tuple[int, ...]

    def contains(self, theta, tol: float = 1e-9) -> bool:
        theta = np.asarray(theta, dtype=float)
        return bool(np.all(self.h @ theta <= self.rhs
                           + tol * np.maximum(1.0, np.abs(self.rhs))))


@dataclass
class PwaFeedbackLaw:
    """Polyhedral partition with one affine optimizer per region."""

    regions: list[Region]
    cost: np.ndarray
    domain: Polyhedron
    diagnostics: list[str] = field(default_factory=list)

    @property
    def n_regions(self) -> int:
        return len(self.regions)

    def locate(self, theta, tol: float = 1e-9) -> int:
        """Index of the first region containing theta (ties -> lowest index)."""
        for idx, reg in enumerate(self.regions):
            if reg.contains(theta, tol):
                return idx
        raise OutOfDomainError(f"theta {np.asarray(theta)} lies in no region")

    def value(self, theta, tol: float = 1e-9) -> float:
        return float(self.cost @ eval_pwa(self, theta, tol))


def eval_pwa(law: PwaFeedbackLaw, theta, tol: float = 1e-9) -> np.ndarray:
    """Evaluate the explicit optimizer z*(theta) = L_i theta + l_i."""
    theta = np.asarray(theta, dtype=float)
    reg = law.regions[law.locate(theta, tol)]
    return reg.gain @ theta + reg.offset


def _canonical_key(h, rhs, decimals=9):
    rows = sorted(
        tuple(np.round(np.concatenate([h[i], [rhs[i]]]), decimals))
        for i in range(h.shape[0])
    )
    return tuple(rows)


def solve_mplp(plp: ParametricLp, tol: Tolerances = DEFAULT_TOL,
               max_params: int = 3, max_rows: int = 26,
               max_bases: int = 2_000_000) -> PwaFeedbackLaw:
    """Enumerate optimal bases into an explicit pwa law over the parameter set.

    Regions of measure zero (inscribed-ball radius below the region
    tolerance) come from degenerate bases and are dropped into the
    diagnostics list.  Overlapping regions produced by degenerate optima
    are kept; evaluation resolves ties toward the lexicographically
    smallest basis because enumeration order is lexicographic.
    """
    m, nz = plp.w.shape
    if plp.n_params > max_params:
        raise ScaleExceededError(
            f"{plp.n_params} parameters exceed enumeration limit {max_params}")
    if m > max_rows:
        raise ScaleExceededError(f"{m} rows exceed enumeration limit {max_rows}")
    if nz == 0 or math.comb(m, nz) > max_bases:
        raise ScaleExceededError(
            f"C({m},{nz}) candidate bases exceed limit {max_bases}")

    combos = np.array(list(itertools.combinations(range(m), nz)), dtype=int)
    wb = plp.w[combos]                                   # (K, nz, nz)
    row_norms = np.linalg.norm(wb, axis=2)               # (K, nz)
    hadamard = np.prod(np.maximum(row_norms, 1e-30), axis=1)
    dets = np.linalg.det(wb)
    nonsing = np.abs(dets) > 1e-12 * np.maximum(hadamard, 1e-30)

    law = PwaFeedbackLaw(regions=[], cost=plp.c, domain=plp.omega)
    if not np.any(nonsing):
        return law

    idx = np.nonzero(nonsing)[0]
    wb_ns = wb[idx]
    neg_c = np.repeat(-plp.c[None, :, None], idx.size, axis=0)
    duals = np.linalg.solve(np.transpose(wb_ns, (0, 2, 1)), neg_c)[..., 0]
    dual_ok = np.all(duals >= -1e-9, axis=1)
    survivors = idx[dual_ok]
    if survivors.size == 0:
        return law

    gains = np.linalg.solve(wb[survivors], plp.s[combos[survivors]])
    offsets = np.linalg.solve(wb[survivors],
                              plp.g[combos[survivors]][..., None])[..., 0]

    seen_keys = set()
    for pos, ci in enumerate(survivors):
        basis = tuple(int(b) for b in combos[ci])
        gain = gains[pos]
        offset = offsets[pos]
        if not (np.all(np.isfinite(gain)) and np.all(np.isfinite(offset))):
            law.diagnostics.append(f"basis {basis}: non-finite solve, skipped")
            continue
        mask = np.ones(m, dtype=bool)
        mask[list(basis)] = False
        h_rows = plp.w[mask] @ gain - plp.s[mask]
        rhs = plp.g[mask] - plp.w[mask] @ offset
        h_rows = np.vstack([h_rows, plp.omega.p])
        rhs = np.concatenate([rhs, plp.omega.q])

        norms = np.linalg.norm(h_rows, axis=1)
        keep = norms > 1e-12
        if np.any(rhs[~keep] < -1e-9):
            continue  # constant row violated: empty region
        h_rows = h_rows[keep] / norms[keep, None]
        rhs = rhs[keep] / norms[keep]

        _, radius = Polyhedron(h_rows, rhs).chebyshev()
        if radius <= tol.region:
            law.diagnostics.append(
                f"basis {basis}: degenerate region (radius {max(radius, 0):.2e}) dropped")
            continue

        key = _canonical_key(h_rows, rhs)
        if key in seen_keys:
            continue  # duplicate region; earlier (lex-smaller) basis kept
        seen_keys.add(key)
        law.regions.append(Region(h=h_rows, rhs=rhs, gain=gain,
                                  offset=offset, basis=basis))
    return law


# ---------------------------------------------------------------------------
# Export for offline inspection
# ---------------------------------------------------------------------------

def law_to_dict(law: PwaFeedbackLaw) -> dict:
    return {
        "cost": law.cost.tolist(),
        "domain": {"p": law.domain.p.tolist(), "q": law.domain.q.tolist()},
        "regions": [
            {
                "H": reg.h.tolist(),
                "h": reg.rhs.tolist(),
                "L": reg.gain.tolist(),
                "l": reg.offset.tolist(),
                "basis": list(reg.basis),
            }
            for reg in law.regions
        ],
        "diagnostics": list(law.diagnostics),
    }


def law_from_dict(data: dict) -> PwaFeedbackLaw:
    regions = [
        Region(
            h=np.asarray(reg["H"], dtype=float),
            rhs=np.asarray(reg["h"], dtype=float),
            gain=np.asarray(reg["L"], dtype=float),
            offset=np.asarray(reg["l"], dtype=float),
            basis=tuple(reg.get("basis", ())),
        )
        for reg in data["regions"]
    ]
    return PwaFeedbackLaw(
        regions=regions,
        cost=np.asarray(data["cost"], dtype=float),
        domain=Polyhedron(np.asarray(data["domain"]["p"], dtype=float),
                          np.asarray(data["domain"]["q"], dtype=float)),
        diagnostics=list(data.get("diagnostics", [])),
    )


def save_law(law: PwaFeedbackLaw, path) -> None:
    with open(path, "w") as fh:
        json.dump(law_to_dict(law), fh, indent=2)
        fh.write("\n")


def load_law(path) -> PwaFeedbackLaw:
    with open(path) as fh:
        return law_from_dict(json.load(fh))
