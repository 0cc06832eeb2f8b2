import json
import math

import numpy as np
import pytest

from flowctrl.network import (CellParams, ConstraintViolationError,
                              InflowProfile, Junction, NetworkGraph,
                              UnsupportedTopologyError, flow_bounds,
                              inflow_rates, junction_type, load_inflow,
                              load_network, neighborhoods, network_from_dict,
                              network_to_dict, save_network, step_dynamics,
                              validate_network)
from flowctrl.traffic import trivial_action

from netgen import random_network, random_state


class TestValidation:
    def test_example1_scaling_is_valid(self, example1_net):
        assert validate_network(example1_net).ok

    def test_cfl_violation_reported(self):
        net = NetworkGraph([CellParams(1.0, 2.0, 0.3, 5.0, 1.0)],
                           np.zeros((1, 1)), off_ramps=[0])
        codes = [v.code for v in validate_network(net).violations]
        assert "cfl" in codes

    def test_diverge_split_rows_sum_to_one(self, fig5_net):
        assert validate_network(fig5_net).ok
        assert fig5_net.split_ratios[3, 4] == pytest.approx(0.3)
        assert fig5_net.split_ratios[3, 5] == pytest.approx(0.7)

    def test_row_sum_violation_reported(self):
        ratios = np.zeros((2, 2))
        ratios[0, 1] = 0.8
        cells = [CellParams(1.0, 0.5, 0.3, 3.0, 1.0)] * 2
        net = NetworkGraph(cells, ratios, off_ramps=[1])
        codes = [v.code for v in validate_network(net).violations]
        assert "split_ratios" in codes

    def test_row_sums_renormalized_within_tolerance(self):
        ratios = np.zeros((2, 2))
        ratios[0, 1] = 1.0 + 5e-10
        cells = [CellParams(1.0, 0.5, 0.3, 3.0, 1.0)] * 2
        net = NetworkGraph(cells, ratios, off_ramps=[1])
        assert net.split_ratios[0, 1] == 1.0
        assert validate_network(net).ok

    def test_infinite_gamma_off_ramp_flagged(self):
        cells = [CellParams(1.0, 0.5, 0.3, math.inf, 1.0),
                 CellParams(1.0, 0.5, 0.3, 3.0, 1.0)]
        ratios = np.zeros((2, 2))
        ratios[0, 1] = 1.0
        net = NetworkGraph(cells, ratios, off_ramps=[1])  # cell 0 not an on-ramp
        codes = [v.code for v in validate_network(net).violations]
        assert "jam_density" in codes

    def test_mixed_junction_rejected(self):
        # two incoming and two outgoing cells at one junction
        ratios = np.zeros((6, 6))
        ratios[0, 2] = 0.5
        ratios[0, 3] = 0.5
        ratios[1, 2] = 0.5
        ratios[1, 3] = 0.5
        cells = [CellParams(1.0, 0.5, 0.3,
                            math.inf if i < 2 else 3.0, 1.0) for i in range(6)]
        net = NetworkGraph(cells, ratios, on_ramps=[0, 1], off_ramps=[2, 3, 4, 5])
        codes = [v.code for v in validate_network(net).violations]
        assert "junction" in codes


class TestJunctions:
    def test_merge_ordinary_diverge(self, fig5_net):
        types = {junction_type(fig5_net, j) for j in fig5_net.junctions()}
        assert types == {"merge", "ordinary", "diverge"}
        merge = fig5_net.head_junction(0)
        assert merge.incoming == (0, 1) and merge.outgoing == (2,)
        assert junction_type(fig5_net, merge) == "merge"
        div = fig5_net.head_junction(3)
        assert junction_type(fig5_net, div) == "diverge"
        assert junction_type(fig5_net, fig5_net.head_junction(2)) == "ordinary"

    def test_mixed_junction_type_raises(self, fig5_net):
        with pytest.raises(UnsupportedTopologyError):
            junction_type(fig5_net, Junction((0, 1), (2, 3)))

    def test_classification_partitions_junctions(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            net = random_network(rng, n_target=int(rng.integers(3, 9)))
            junctions = net.junctions()
            counts = {"ordinary": 0, "merge": 0, "diverge": 0}
            for j in junctions:
                counts[junction_type(net, j)] += 1
            assert sum(counts.values()) == len(junctions)


class TestNeighborhoods:
    def test_fig5_cell4(self, fig5_net):
        e_in, e_out, d = neighborhoods(fig5_net, 3)
        assert e_in == (2,)
        assert e_out == (4, 5)
        assert d == (4, 5)

    def test_fig5_one_hop_sets(self, fig5_net):
        assert neighborhoods(fig5_net, 0)[2] == (1, 2)
        assert neighborhoods(fig5_net, 3)[2] == (4, 5)

    def test_off_ramp_empty(self, fig5_net):
        assert neighborhoods(fig5_net, 4)[2] == ()

    def test_out_neighbors_subset_of_d(self):
        rng = np.random.default_rng(3)
        for _ in range(10):
            net = random_network(rng, n_target=7)
            for i in range(net.n_cells):
                _, e_out, d = neighborhoods(net, i)
                assert set(e_out) <= set(d)


class TestInflowRates:
    def test_identity_split(self, example1_net):
        y = inflow_rates(example1_net, np.array([0.5, 0.0, 0.0]))
        assert y[1] == pytest.approx(0.5)

    def test_merge_sum(self, fig5_net):
        u = np.zeros(6)
        u[0], u[1] = 0.2, 0.3
        y = inflow_rates(fig5_net, u)
        assert y[2] == pytest.approx(0.5)

    def test_on_ramp_exogenous(self, fig5_net):
        lam = np.zeros(6)
        lam[0] = 0.7
        y = inflow_rates(fig5_net, np.zeros(6), lam)
        assert y[0] == pytest.approx(0.7)

    def test_linear_in_controls(self, fig5_net):
        rng = np.random.default_rng(1)
        for _ in range(25):
            u1, u2 = rng.random(6), rng.random(6)
            a, b = rng.normal(), rng.normal()
            lhs = inflow_rates(fig5_net, a * u1 + b * u2)
            rhs = a * inflow_rates(fig5_net, u1) + b * inflow_rates(fig5_net, u2)
            assert lhs == pytest.approx(rhs)


class TestStepDynamics:
    def test_arithmetic(self):
        cells = [CellParams(1.0, 0.9, 0.3, 10.0 / 3.0, 10.0)]
        net = NetworkGraph(cells, np.zeros((1, 1)), off_ramps=[0])
        x1 = step_dynamics(net, np.array([1.0]), np.array([0.85]))
        assert x1 == pytest.approx([0.15])

    def test_zero_control_fixed_point(self, example1_net, example1_x0):
        assert step_dynamics(example1_net, example1_x0, np.zeros(3)) \
            == pytest.approx(example1_x0)

    def test_trivial_action_keeps_state_nonnegative(self, example1_net,
                                                    example1_x0):
        u = trivial_action(example1_net, example1_x0)
        x1 = step_dynamics(example1_net, example1_x0, u)
        assert np.all(x1 >= 0.0)
        assert x1 == pytest.approx([0.15, 0.9, 0.46])

    def test_infeasible_pair_names_constraint(self, example1_net, example1_x0):
        with pytest.raises(ConstraintViolationError, match=r"u\[0\]"):
            step_dynamics(example1_net, example1_x0, np.array([2.0, 0.0, 0.0]))


class TestFlowBounds:
    def test_example1_values(self, example1_net, example1_x0):
        fb = flow_bounds(example1_net, example1_x0)
        assert fb.upper == pytest.approx([0.85, 0.45, 0.09])
        assert fb.merge_groups == ()

    def test_zero_mass_zero_demand(self, example1_net):
        fb = flow_bounds(example1_net, np.zeros(3))
        assert fb.upper == pytest.approx([0.0, 0.0, 0.0])

    def test_jammed_downstream_blocks_outflow(self, example1_net):
        x = np.array([1.0, 10.0 / 3.0, 0.0])  # cell 2 at jam mass
        fb = flow_bounds(example1_net, x)
        assert fb.upper[0] == pytest.approx(0.0)

    def test_merge_coupling_row(self, fig5_net):
        x = np.ones(6)
        fb = flow_bounds(fig5_net, x)
        groups = {g.cells: g.bound for g in fb.merge_groups}
        assert (0, 1) in groups
        supply = 0.3 * (10.0 / 3.0 - 1.0)
        assert groups[(0, 1)] == pytest.approx(supply)


class TestClosedLoopSafety:
    def test_random_feasible_rollouts_stay_in_bounds(self):
        rng = np.random.default_rng(11)
        for _ in range(25):
            net = random_network(rng, n_target=int(rng.integers(3, 8)))
            x = random_state(rng, net)
            hi = net.state_upper()
            for _ in range(12):
                fb = flow_bounds(net, x)
                u = fb.upper * rng.random(net.n_cells)
                for grp in fb.merge_groups:
                    tot = sum(u[c] for c in grp.cells)
                    if tot > grp.bound and tot > 0:
                        for c in grp.cells:
                            u[c] *= grp.bound / tot
                lam = np.zeros(net.n_cells)
                for i in net.on_ramps:
                    lam[i] = rng.uniform(0, net.cells[i].capacity)
                x = step_dynamics(net, x, u, lam)
                assert np.all(x >= 0.0)
                fin = np.isfinite(hi)
                assert np.all(x[fin] <= hi[fin] + 1e-9)

    def test_mass_conservation_on_closed_line(self, example1_net, example1_x0):
        x = example1_x0.copy()
        rng = np.random.default_rng(2)
        for _ in range(10):
            fb = flow_bounds(example1_net, x)
            u = fb.upper * rng.random(3)
            x_next = step_dynamics(example1_net, x, u)
            assert x_next.sum() == pytest.approx(x.sum() - u[2])
            x = x_next


class TestInflowProfile:
    def test_bounds_enforced(self, example1_net):
        with pytest.raises(ValueError):
            InflowProfile(example1_net, np.array([[20.0, 0.0, 0.0]]))
        with pytest.raises(ValueError):
            InflowProfile(example1_net, np.array([[0.0, 0.5, 0.0]]))

    def test_steps_beyond_horizon_are_zero(self, example1_net):
        lam = InflowProfile(example1_net, np.array([[0.5, 0.0, 0.0]]))
        assert lam.at(0)[0] == 0.5
        assert np.all(lam.at(5) == 0.0)


class TestFileFormats:
    def test_network_roundtrip(self, tmp_path, fig5_net):
        path = tmp_path / "net.json"
        save_network(fig5_net, path)
        loaded = load_network(path)
        assert loaded.n_cells == fig5_net.n_cells
        assert np.allclose(loaded.split_ratios, fig5_net.split_ratios)
        assert loaded.on_ramps == fig5_net.on_ramps
        assert loaded.off_ramps == fig5_net.off_ramps
        assert validate_network(loaded).ok

    def test_infinite_gamma_marker(self, fig5_net):
        data = network_to_dict(fig5_net)
        assert data["cells"][0]["gamma"] == "inf"
        again = network_from_dict(data)
        assert not np.isfinite(again.cells[0].jam_density)

    def test_inflow_file(self, tmp_path, example1_net):
        path = tmp_path / "inflow.json"
        path.write_text(json.dumps([{"cell": 1, "values": [0.5, 0.25]}]))
        lam = load_inflow(path, example1_net, n_steps=4)
        assert lam.at(0)[0] == 0.5
        assert lam.at(1)[0] == 0.25
        assert lam.at(3)[0] == 0.0
