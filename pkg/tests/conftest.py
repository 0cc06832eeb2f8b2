import numpy as np
import pytest

from flowctrl.instances import (EXAMPLE1_X0, example1_cost, example1_network,
                                gas_4cell_scenario, synthetic_32cell_network)
from flowctrl.network import CellParams, NetworkGraph


@pytest.fixture(scope="session")
def example1_net():
    return example1_network()


@pytest.fixture(scope="session")
def example1_x0():
    return EXAMPLE1_X0.copy()


@pytest.fixture
def example1_cost_factory():
    return example1_cost


@pytest.fixture(scope="session")
def fig5_net():
    """Six-cell network with one merge, one ordinary and one diverge junction."""
    ratios = np.zeros((6, 6))
    ratios[0, 2] = 1.0
    ratios[1, 2] = 1.0
    ratios[2, 3] = 1.0
    ratios[3, 4] = 0.3
    ratios[3, 5] = 0.7
    cells = [CellParams(1.0, 0.9, 0.3,
                        np.inf if i in (0, 1) else 10.0 / 3.0, 10.0)
             for i in range(6)]
    return NetworkGraph(cells, ratios, on_ramps=[0, 1], off_ramps=[4, 5],
                        sampling_time=1.0)


@pytest.fixture(scope="session")
def net32():
    return synthetic_32cell_network()


@pytest.fixture(scope="session")
def gas4():
    return gas_4cell_scenario()
