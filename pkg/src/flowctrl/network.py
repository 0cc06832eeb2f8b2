"""Cell-based transport network model: topology, validation, dynamics.

A network is a directed graph whose edges are road cells.  Cells are
indexed 0..n-1 internally (JSON files use 1-based indices).  Junctions,
neighborhoods and the one-hop information sets are derived from the
split-ratio sparsity pattern together with the source/sink sets, so the
ratio matrix is the single source of truth for the topology.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

_ROW_SUM_TOL = 1e-9


class UnsupportedTopologyError(Exception):
    """Junction with multiple incoming and multiple outgoing cells."""


class ConstraintViolationError(Exception):
    """A state/control pair violates the network flow constraints."""


@dataclass(frozen=True)
class CellParams:
    """Physical parameters of one cell.

    length (mi), free_flow_speed v (mi/hr), backward_wave_speed w (mi/hr),
    jam_density gamma (veh/mi, math.inf allowed for on-ramps) and
    capacity C (veh/hr).
    """

    length: float
    free_flow_speed: float
    backward_wave_speed: float
    jam_density: float
    capacity: float

    @property
    def jam_mass(self) -> float:
        """Maximum traffic mass gamma * length (veh); inf for on-ramps."""
        return self.jam_density * self.length


@dataclass(frozen=True)
class Junction:
    """Interface between consecutive cells: incoming and outgoing edge sets."""

    incoming: tuple[int, ...]
    outgoing: tuple[int, ...]


@dataclass(frozen=True)
class Violation:
    code: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self) -> str:
        if self.ok:
            return "network valid"
        return "\n".join(f"[{v.code}] {v.message}" for v in self.violations)


class NetworkGraph:
    """Directed cell graph with per-cell parameters and split ratios.

    Split-ratio rows whose sums differ from 1 by at most 1e-9 are
    renormalized on construction (hand-edited files routinely carry that
    much rounding); larger discrepancies are left for validation to flag.
    """

    def __init__(self, cells, split_ratios, on_ramps=(), off_ramps=(),
                 sampling_time=1.0):
        self.cells: tuple[CellParams, ...] = tuple(cells)
        n = len(self.cells)
        r = np.array(split_ratios, dtype=float)
        if r.shape != (n, n):
            raise ValueError(f"split_ratios must be {n}x{n}, got {r.shape}")
        self.on_ramps = frozenset(int(i) for i in on_ramps)
        self.off_ramps = frozenset(int(i) for i in off_ramps)
        for i in range(n):
            if i in self.off_ramps:
                continue
            s = r[i].sum()
            if s > 0 and abs(s - 1.0) <= _ROW_SUM_TOL and s != 1.0:
                r[i] /= s
        self.split_ratios = r
        self.sampling_time = float(sampling_time)
        self._succ = tuple(tuple(int(j) for j in np.nonzero(r[i] > 0)[0])
                           for i in range(n))
        self._pred = tuple(tuple(int(i) for i in np.nonzero(r[:, j] > 0)[0])
                           for j in range(n))

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    def successors(self, i: int) -> tuple[int, ...]:
        return self._succ[i]

    def predecessors(self, i: int) -> tuple[int, ...]:
        return self._pred[i]

    def head_junction(self, i: int) -> Junction | None:
        """Downstream junction of cell i, or None for a network exit."""
        if not self._succ[i]:
            return None
        inc = {i}
        out = set(self._succ[i])
        while True:
            inc2 = set(inc)
            for o in out:
                inc2.update(self._pred[o])
            out2 = set(out)
            for q in inc2:
                out2.update(self._succ[q])
            if inc2 == inc and out2 == out:
                break
            inc, out = inc2, out2
        return Junction(tuple(sorted(inc)), tuple(sorted(out)))

    def junctions(self) -> list[Junction]:
        """All cell-to-cell interfaces, each reported once."""
        seen = set()
        result = []
        for i in range(self.n_cells):
            j = self.head_junction(i)
            if j is not None and j not in seen:
                seen.add(j)
                result.append(j)
        return result

    def state_upper(self) -> np.ndarray:
        """Per-cell maximum traffic mass (inf for unbounded on-ramps)."""
        return np.array([c.jam_mass for c in self.cells])


def junction_type(net: NetworkGraph, junction: Junction) -> str:
    """Classify a junction as 'ordinary', 'merge' or 'diverge'."""
    n_in, n_out = len(junction.incoming), len(junction.outgoing)
    if n_in == 1 and n_out == 1:
        return "ordinary"
    if n_in > 1 and n_out == 1:
        return "merge"
    if n_in == 1 and n_out > 1:
        return "diverge"
    raise UnsupportedTopologyError(
        f"junction {junction} has {n_in} incoming and {n_out} outgoing cells"
    )


def neighborhoods(net: NetworkGraph, i: int):
    """In-neighbors, out-neighbors and the one-hop information set D_i.

    D_i holds every cell other than i entering or leaving the head
    junction of cell i; it is empty for off-ramps.
    """
    e_in = net.predecessors(i)
    e_out = net.successors(i)
    j = net.head_junction(i)
    if j is None:
        d = ()
    else:
        d = tuple(sorted((set(j.incoming) | set(j.outgoing)) - {i}))
    return e_in, e_out, d


def validate_network(net: NetworkGraph) -> ValidationReport:
    """Check every structural invariant; empty report iff the network is valid."""
    v: list[Violation] = []
    n = net.n_cells
    ts = net.sampling_time
    if ts <= 0:
        v.append(Violation("sampling_time", f"sampling_time {ts} must be positive"))

    for i, c in enumerate(net.cells):
        for name, val in (("length", c.length), ("free_flow_speed", c.free_flow_speed),
                          ("backward_wave_speed", c.backward_wave_speed),
                          ("jam_density", c.jam_density), ("capacity", c.capacity)):
            if not val > 0:
                v.append(Violation("positivity", f"cell {i}: {name}={val} not positive"))
        if c.free_flow_speed * ts > c.length * (1 + 1e-12):
            v.append(Violation(
                "cfl", f"cell {i}: v*Ts = {c.free_flow_speed * ts:g} exceeds length {c.length:g}"))
        if c.backward_wave_speed * ts > c.length * (1 + 1e-12):
            v.append(Violation(
                "cfl", f"cell {i}: w*Ts = {c.backward_wave_speed * ts:g} exceeds length {c.length:g}"))
        if i not in net.on_ramps and not np.isfinite(c.jam_density):
            v.append(Violation(
                "jam_density", f"cell {i}: infinite jam density on a non-on-ramp cell"))
        if i in net.on_ramps and np.isfinite(c.jam_density):
            v.append(Violation(
                "jam_density", f"on-ramp {i}: jam density must be unbounded for "
                               f"exogenous inflow feasibility"))

    r = net.split_ratios
    for i in range(n):
        if r[i, i] != 0.0:
            v.append(Violation("split_ratios", f"cell {i}: self split ratio must be 0"))
        if np.any(r[i] < 0) or np.any(r[i] > 1):
            v.append(Violation("split_ratios", f"cell {i}: ratios outside [0, 1]"))
        s = r[i].sum()
        if i in net.off_ramps:
            if s != 0.0:
                v.append(Violation("split_ratios", f"off-ramp {i} has outgoing split ratios"))
        elif abs(s - 1.0) > _ROW_SUM_TOL:
            v.append(Violation("split_ratios", f"cell {i}: split ratios sum to {s:.12g}, not 1"))

    for i in net.on_ramps:
        if net.predecessors(i):
            v.append(Violation("on_ramps", f"on-ramp {i} has in-neighbors {net.predecessors(i)}"))
    for i in net.on_ramps & net.off_ramps:
        v.append(Violation("ramps", f"cell {i} is both an on-ramp and an off-ramp"))

    for j in net.junctions():
        try:
            junction_type(net, j)
        except UnsupportedTopologyError as exc:
            v.append(Violation("junction", str(exc)))

    return ValidationReport(tuple(v))


@dataclass(frozen=True)
class MergeGroup:
    """Incoming cells of one merge junction with their shared supply bound."""

    cells: tuple[int, ...]
    bound: float


@dataclass(frozen=True)
class FlowBounds:
    """Feasible control set at a given state.

    Box part: 0 <= u_i <= upper[i].  Each merge junction adds a coupling
    row: the incoming cells' controls must sum to at most the merge bound.
    """

    upper: np.ndarray
    merge_groups: tuple[MergeGroup, ...] = ()

    def check(self, u: np.ndarray, tol: float = 1e-8) -> list[str]:
        """Return messages for every violated constraint (empty if feasible)."""
        bad = []
        for i, ui in enumerate(np.asarray(u, dtype=float)):
            if ui < -tol:
                bad.append(f"u[{i}] = {ui:.3g} negative")
            cap = self.upper[i]
            if ui > cap + tol * max(1.0, abs(cap)):
                bad.append(f"u[{i}] = {ui:.6g} exceeds bound {cap:.6g}")
        for g in self.merge_groups:
            tot = float(sum(u[i] for i in g.cells))
            if tot > g.bound + tol * max(1.0, abs(g.bound)):
                bad.append(
                    f"merge {g.cells}: inflow sum {tot:.6g} exceeds supply {g.bound:.6g}")
        return bad


def flow_bounds(net: NetworkGraph, x: np.ndarray) -> FlowBounds:
    """Per-control feasible set at state x.

    Cells whose head is ordinary or a diverge get the box bound
    min{demand, capacity, downstream supply / split, downstream capacity /
    split}; incoming cells of a merge keep only their demand/capacity box
    and share the merge supply as a coupling row.
    """
    x = np.asarray(x, dtype=float)
    n = net.n_cells
    upper = np.empty(n)
    groups: dict[tuple[int, ...], float] = {}
    for i in range(n):
        c = net.cells[i]
        cap = min(c.free_flow_speed / c.length * x[i], c.capacity)
        j = net.head_junction(i)
        if j is not None and len(j.incoming) > 1:
            # merge head: coupling row added once per junction
            q = j.outgoing[0]
            cq = net.cells[q]
            supply = min(
                cq.backward_wave_speed * (cq.jam_density - x[q] / cq.length),
                cq.capacity)
            groups[j.incoming] = max(0.0, supply)
        elif j is not None:
            for s in j.outgoing:
                cs = net.cells[s]
                rati = net.split_ratios[i, s]
                if np.isfinite(cs.jam_density):
                    cap = min(cap, cs.backward_wave_speed / rati
                              * (cs.jam_density - x[s] / cs.length))
                cap = min(cap, cs.capacity / rati)
        upper[i] = max(0.0, cap)
    merge_groups = tuple(MergeGroup(cells, b) for cells, b in sorted(groups.items()))
    return FlowBounds(upper=upper, merge_groups=merge_groups)


def inflow_rates(net: NetworkGraph, u: np.ndarray,
                 lam_k: np.ndarray | None = None) -> np.ndarray:
    """Total inflow rate into each cell: exogenous for on-ramps, routed
    upstream outflow otherwise."""
    u = np.asarray(u, dtype=float)
    y = net.split_ratios.T @ u
    for i in net.on_ramps:
        y[i] = 0.0 if lam_k is None else float(lam_k[i])
    return y


def step_dynamics(net: NetworkGraph, x: np.ndarray, u: np.ndarray,
                  lam_k: np.ndarray | None = None, check: bool = True,
                  tol: float = 1e-7) -> np.ndarray:
    """Advance the conservation dynamics one step: x' = x + Ts (y - u).

    With ``check`` the pair (x, u) is verified against the flow constraints
    first; the error names the first violated constraint.  The result is
    snapped onto [0, jam mass] when within ``tol`` (the constraints
    guarantee the invariant mathematically; this removes float dust).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    if check:
        bad = flow_bounds(net, x).check(u, tol=tol)
        if lam_k is not None:
            for i in range(net.n_cells):
                li = float(lam_k[i])
                if i in net.on_ramps:
                    if li < -tol or li > net.cells[i].capacity + tol:
                        bad.append(f"lambda[{i}] = {li:.6g} outside [0, capacity]")
                elif li != 0.0:
                    bad.append(f"lambda[{i}] nonzero on a non-on-ramp cell")
        if bad:
            raise ConstraintViolationError(bad[0])
    y = inflow_rates(net, u, lam_k)
    x_next = x + net.sampling_time * (y - u)
    hi = net.state_upper()
    x_next = np.where(x_next < 0.0, np.where(x_next > -tol, 0.0, x_next), x_next)
    over = np.isfinite(hi) & (x_next > hi) & (x_next < hi + tol)
    x_next[over] = hi[over]
    return x_next


def validate_state(net: NetworkGraph, x: np.ndarray, tol: float = 1e-9) -> list[str]:
    """Messages for state-invariant violations (empty if valid)."""
    x = np.asarray(x, dtype=float)
    bad = []
    hi = net.state_upper()
    for i in range(net.n_cells):
        if x[i] < -tol:
            bad.append(f"x[{i}] = {x[i]:.6g} negative")
        if np.isfinite(hi[i]) and x[i] > hi[i] + tol * max(1.0, hi[i]):
            bad.append(f"x[{i}] = {x[i]:.6g} exceeds jam mass {hi[i]:.6g}")
    return bad


class InflowProfile:
    """Exogenous inflow rates per on-ramp and time step.

    Steps beyond the stored horizon read as zero.  Rates must lie in
    [0, capacity] on on-ramps and be absent elsewhere.
    """

    def __init__(self, net: NetworkGraph, values: np.ndarray):
        values = np.atleast_2d(np.asarray(values, dtype=float))
        if values.shape[1] != net.n_cells:
            raise ValueError(
                f"inflow profile has {values.shape[1]} columns for "
                f"{net.n_cells} cells")
        for i in range(net.n_cells):
            if i in net.on_ramps:
                cap = net.cells[i].capacity
                if np.any(values[:, i] < 0) or np.any(values[:, i] > cap + 1e-12):
                    raise ValueError(
                        f"inflow for on-ramp {i} outside [0, {cap:g}]")
            elif np.any(values[:, i] != 0.0):
                raise ValueError(f"nonzero inflow on non-on-ramp cell {i}")
        self.values = values

    @classmethod
    def zero(cls, net: NetworkGraph, n_steps: int = 1) -> "InflowProfile":
        return cls(net, np.zeros((max(n_steps, 1), net.n_cells)))

    @property
    def n_steps(self) -> int:
        return self.values.shape[0]

    def at(self, k: int) -> np.ndarray:
        if 0 <= k < self.n_steps:
            return self.values[k]
        return np.zeros(self.values.shape[1])


# ---------------------------------------------------------------------------
# JSON interchange (files carry 1-based cell indices)
# ---------------------------------------------------------------------------

def network_to_dict(net: NetworkGraph) -> dict:
    cells = []
    for c in net.cells:
        cells.append({
            "length": c.length,
            "v": c.free_flow_speed,
            "w": c.backward_wave_speed,
            "gamma": "inf" if not np.isfinite(c.jam_density) else c.jam_density,
            "capacity": c.capacity,
        })
    rows = [[i + 1, j + 1, float(net.split_ratios[i, j])]
            for i in range(net.n_cells) for j in range(net.n_cells)
            if net.split_ratios[i, j] != 0.0]
    return {
        "cells": cells,
        "split_ratios": rows,
        "on_ramps": sorted(i + 1 for i in net.on_ramps),
        "off_ramps": sorted(i + 1 for i in net.off_ramps),
        "sampling_time": net.sampling_time,
    }


def network_from_dict(data: dict) -> NetworkGraph:
    cells = []
    for entry in data["cells"]:
        gamma = entry["gamma"]
        if isinstance(gamma, str):
            gamma = float(gamma)
        cells.append(CellParams(
            length=float(entry["length"]),
            free_flow_speed=float(entry["v"]),
            backward_wave_speed=float(entry["w"]),
            jam_density=float(gamma),
            capacity=float(entry["capacity"]),
        ))
    n = len(cells)
    r = np.zeros((n, n))
    for i, j, ratio in data["split_ratios"]:
        r[int(i) - 1, int(j) - 1] = float(ratio)
    return NetworkGraph(
        cells=cells,
        split_ratios=r,
        on_ramps=[int(i) - 1 for i in data.get("on_ramps", [])],
        off_ramps=[int(i) - 1 for i in data.get("off_ramps", [])],
        sampling_time=float(data.get("sampling_time", 1.0)),
    )


def load_network(path) -> NetworkGraph:
    with open(path) as fh:
        return network_from_dict(json.load(fh))


def save_network(net: NetworkGraph, path) -> None:
    with open(path, "w") as fh:
        json.dump(network_to_dict(net), fh, indent=2)
        fh.write("\n")


def load_inflow(path, net: NetworkGraph, n_steps: int | None = None) -> InflowProfile:
    """Read an inflow profile file: a list of {cell, values} records."""
    with open(path) as fh:
        data = json.load(fh)
    length = n_steps or max((len(rec["values"]) for rec in data), default=1)
    values = np.zeros((length, net.n_cells))
    for rec in data:
        i = int(rec["cell"]) - 1
        vals = np.asarray(rec["values"], dtype=float)
        values[:min(length, vals.size), i] = vals[:length]
    return InflowProfile(net, values)
