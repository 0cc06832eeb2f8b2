"""Bundled benchmark instances: the 3-cell example, a synthetic 32-cell
freeway network, and a 4-cell gas pipeline scenario."""

from __future__ import annotations

import math

import numpy as np

from .gas import GasLineNetwork
from .network import CellParams, NetworkGraph
from .traffic import LinearCost


def example1_network() -> NetworkGraph:
    """Three-cell line with zero exogenous inflow.

    Scaling: unit lengths and sampling time, v = 0.9, supply 1 - 0.3 x on
    the interior cells (w = 0.3, jam mass 10/3).  Capacities are set high
    enough never to bind; the first cell is an unbounded-jam on-ramp so
    inflow robustness experiments can inject demand there.
    """
    ratios = np.zeros((3, 3))
    ratios[0, 1] = 1.0
    ratios[1, 2] = 1.0
    cells = [
        CellParams(length=1.0, free_flow_speed=0.9, backward_wave_speed=0.3,
                   jam_density=math.inf, capacity=10.0),
        CellParams(length=1.0, free_flow_speed=0.9, backward_wave_speed=0.3,
                   jam_density=10.0 / 3.0, capacity=10.0),
        CellParams(length=1.0, free_flow_speed=0.9, backward_wave_speed=0.3,
                   jam_density=10.0 / 3.0, capacity=10.0),
    ]
    return NetworkGraph(cells, ratios, on_ramps=[0], off_ramps=[2],
                        sampling_time=1.0)


def example1_cost(horizon: int) -> LinearCost:
    """State weights (1, 4, 2) at every step including the terminal one."""
    return LinearCost.constant([1.0, 4.0, 2.0], 0.0, horizon, 3)


EXAMPLE1_X0 = np.array([1.0, 0.5, 0.1])


# Junction list of the synthetic 32-cell corridor (1-based cell ids):
# a mainline with on-ramp merges and off-ramp diverges, long cells
# 3,4,9,10,12,16,20 on the mainline.
_JUNCTIONS_32 = [
    ((1, 2), (3,)),
    ((3,), (4,)),
    ((4, 7), (5,)),
    ((5,), (6,)),
    ((6,), (8, 15)),
    ((8, 13), (9,)),
    ((9,), (10,)),
    ((10,), (11, 12)),
    ((12, 19), (14,)),
    ((14,), (16, 17)),
    ((16,), (18,)),
    ((18, 21), (20,)),
    ((20,), (23, 27)),
    ((23, 22), (24,)),
    ((24,), (25, 28)),
    ((25, 29), (26,)),
    ((26,), (30,)),
    ((30, 32), (31,)),
]

_ON_32 = (1, 2, 7, 13, 19, 21, 22, 29, 32)
_OFF_32 = (11, 15, 17, 27, 28, 31)
_LONG_32 = (3, 4, 9, 10, 12, 16, 20)


def synthetic_32cell_network() -> NetworkGraph:
    """Synthetic 32-cell freeway corridor at realistic urban scale.

    Topology: a mainline with 9 on-ramps merging in and 6 off-ramps
    diverging out (no mixed junctions), uniform diverge splits.  Cell
    parameters: Ts = 1/360 hr, w = 13 mi/hr, jam density 200 veh/mi
    (unbounded on on-ramps); long cells are 2 mi at 65 mi/hr and
    800 veh/hr capacity, the rest 0.5 mi at 25 mi/hr and 400 veh/hr.
    """
    n = 32
    ratios = np.zeros((n, n))
    for incoming, outgoing in _JUNCTIONS_32:
        share = 1.0 / len(outgoing)
        for i in incoming:
            for j in outgoing:
                ratios[i - 1, j - 1] = share
    cells = []
    for cid in range(1, n + 1):
        long = cid in _LONG_32
        cells.append(CellParams(
            length=2.0 if long else 0.5,
            free_flow_speed=65.0 if long else 25.0,
            backward_wave_speed=13.0,
            jam_density=math.inf if cid in _ON_32 else 200.0,
            capacity=800.0 if long else 400.0,
        ))
    return NetworkGraph(cells, ratios,
                        on_ramps=[c - 1 for c in _ON_32],
                        off_ramps=[c - 1 for c in _OFF_32],
                        sampling_time=1.0 / 360.0)


def synthetic_32cell_x0(net: NetworkGraph | None = None) -> np.ndarray:
    """Default initial state: mid-density on bounded cells; on-ramps carry
    the mass whose demand is half their capacity."""
    net = net or synthetic_32cell_network()
    x0 = np.empty(net.n_cells)
    for i, c in enumerate(net.cells):
        if np.isfinite(c.jam_density):
            x0[i] = 0.5 * c.jam_density * c.length
        else:
            x0[i] = 0.5 * c.capacity * c.length / c.free_flow_speed
    return x0


def gas_4cell_scenario() -> GasLineNetwork:
    """Four-cell pipeline: steady demand 8, monotone initial pressures,
    unit purchase price, light drop penalties."""
    horizon = 6
    return GasLineNetwork(
        tau=[0.05] * 4,
        kappa=[4.0] * 4,
        delta=[5.0] * 4,
        u_min=[0.0] * 5,
        u_max=[25.0] * 5,
        x_min=[40.0] * 4,
        x_max=[70.0] * 4,
        demand=[8.0] * horizon,
        output_pressure=[47.0] * (horizon + 1),
        price=[1.0] * horizon,
        drop_weights=0.1,
        horizon=horizon,
        x0=[58.0, 55.0, 52.0, 50.0],
    )
