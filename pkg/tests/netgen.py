"""Random test-instance generators: networks, states, costs.

Networks are grown as DAGs from on-ramp sources using the three junction
templates (ordinary / diverge / merge); unfinished frontier cells become
off-ramps.  All parameters respect the CFL condition by construction.
"""

from __future__ import annotations

import math

import numpy as np

from flowctrl.gas import GasLineNetwork
from flowctrl.mplp import ParametricLp, Polyhedron
from flowctrl.network import CellParams, NetworkGraph
from flowctrl.traffic import LinearCost


def random_network(rng: np.random.Generator, n_target: int = 6,
                   allow_merge: bool = True, n_sources: int | None = None) -> NetworkGraph:
    if n_sources is None:
        n_sources = int(rng.integers(1, 3))
    params: list[dict] = []
    edges: list[tuple[int, int, float]] = []
    on_ramps: list[int] = []

    def new_cell(on_ramp=False):
        idx = len(params)
        params.append({"on": on_ramp})
        if on_ramp:
            on_ramps.append(idx)
        return idx

    frontier = [new_cell(on_ramp=True) for _ in range(n_sources)]
    while frontier and len(params) < n_target:
        pick = int(rng.integers(len(frontier)))
        i = frontier.pop(pick)
        room = n_target - len(params)
        choices = ["ordinary"]
        if room >= 2:
            choices.append("diverge")
        if allow_merge and len(frontier) >= 1:
            choices.append("merge")
        action = choices[int(rng.integers(len(choices)))]
        if action == "ordinary":
            j = new_cell()
            edges.append((i, j, 1.0))
            frontier.append(j)
        elif action == "diverge":
            j1, j2 = new_cell(), new_cell()
            share = float(np.round(rng.uniform(0.2, 0.8), 3))
            edges.append((i, j1, share))
            edges.append((i, j2, 1.0 - share))
            frontier.extend([j1, j2])
        else:
            other = frontier.pop(int(rng.integers(len(frontier))))
            j = new_cell()
            edges.append((i, j, 1.0))
            edges.append((other, j, 1.0))
            frontier.append(j)
    off_ramps = list(frontier)

    n = len(params)
    ratios = np.zeros((n, n))
    for i, j, share in edges:
        ratios[i, j] = share
    cells = []
    for idx, meta in enumerate(params):
        cells.append(CellParams(
            length=1.0,
            free_flow_speed=float(rng.uniform(0.4, 0.9)),
            backward_wave_speed=float(rng.uniform(0.2, 0.5)),
            jam_density=math.inf if meta["on"] else float(rng.uniform(2.0, 4.0)),
            capacity=float(rng.uniform(0.4, 1.5)),
        ))
    return NetworkGraph(cells, ratios, on_ramps=on_ramps, off_ramps=off_ramps,
                        sampling_time=1.0)


def random_state(rng: np.random.Generator, net: NetworkGraph,
                 fill: float = 0.9) -> np.ndarray:
    x = np.empty(net.n_cells)
    for i, c in enumerate(net.cells):
        cap = c.jam_mass if np.isfinite(c.jam_mass) else 2.0
        x[i] = rng.uniform(0.0, fill * cap)
    return x


def topo_order(net: NetworkGraph) -> list[int]:
    indeg = [len(net.predecessors(i)) for i in range(net.n_cells)]
    queue = [i for i in range(net.n_cells) if indeg[i] == 0]
    order = []
    while queue:
        i = queue.pop()
        order.append(i)
        for j in net.successors(i):
            indeg[j] -= 1
            if indeg[j] == 0:
                queue.append(j)
    assert len(order) == net.n_cells, "generator produced a cyclic graph"
    return order


def conforming_cost(rng: np.random.Generator, net: NetworkGraph, horizon: int,
                    with_beta: bool = True) -> LinearCost:
    """Random cost satisfying the trivial-control optimality conditions:
    alpha non-increasing downstream, beta nonpositive and non-decreasing
    in time."""
    n = net.n_cells
    alpha = np.zeros(n)
    for i in reversed(topo_order(net)):
        down = max((alpha[j] for j in net.successors(i)), default=0.0)
        alpha[i] = down + rng.uniform(0.0, 2.0)
    beta = np.zeros((horizon, n))
    if with_beta and rng.random() < 0.7:
        rates = rng.uniform(0.0, 0.3, n)
        for k in range(horizon):
            beta[k] = -rates * (horizon - k)
    return LinearCost(np.tile(alpha, (horizon + 1, 1)), beta, horizon)


def random_cost(rng: np.random.Generator, net: NetworkGraph,
                horizon: int) -> LinearCost:
    alpha = rng.integers(1, 7, net.n_cells).astype(float)
    return LinearCost.constant(alpha, 0.0, horizon, net.n_cells)


def random_plp(rng: np.random.Generator) -> ParametricLp:
    """Random bounded parametric LP at basis-enumeration scale."""
    nz = int(rng.integers(1, 4))
    npar = int(rng.integers(1, 4))
    m = int(rng.integers(nz + 1, 10))
    w = np.vstack([rng.normal(size=(m, nz)).round(2), np.eye(nz), -np.eye(nz)])
    g = np.concatenate([rng.random(m).round(2) + 0.5, np.full(2 * nz, 5.0)])
    s = np.vstack([rng.normal(size=(m, npar)).round(2) * 0.3,
                   np.zeros((2 * nz, npar))])
    c = rng.normal(size=nz).round(2)
    return ParametricLp(c=c, w=w, g=g, s=s,
                        omega=Polyhedron.box([-1.0] * npar, [1.0] * npar))


def random_gas_2cell(rng: np.random.Generator, horizon: int = 2) -> GasLineNetwork:
    """Feasible 2-cell pipeline with monotone initial pressures."""
    top = rng.uniform(55.0, 65.0)
    drop0 = rng.uniform(1.0, 4.0)
    drop1 = rng.uniform(1.0, 4.0)
    return GasLineNetwork(
        tau=rng.uniform(0.03, 0.08, 2),
        kappa=rng.uniform(2.0, 5.0, 2),
        delta=[6.0, 6.0],
        u_min=0.0,
        u_max=[20.0, 20.0, 20.0],
        x_min=[45.0, 45.0],
        x_max=[70.0, 70.0],
        demand=rng.uniform(0.5, 3.0, horizon),
        output_pressure=top - drop0 - drop1,
        price=rng.uniform(0.1, 2.0, horizon),
        drop_weights=float(rng.uniform(0.02, 0.2)),
        horizon=horizon,
        x0=[top, top - drop0],
    )
