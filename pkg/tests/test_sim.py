import numpy as np
import pytest

from flowctrl.network import CellParams, NetworkGraph
from flowctrl.sim import (SchemeComparison, Trajectory, evaluate_cost,
                          relative_loss, simulate, simulate_traffic,
                          trajectory_to_csv)
from flowctrl.traffic import LinearCost, build_horizon_lp

from netgen import random_cost, random_network, random_state


def ex1_cost(n):
    return LinearCost.constant([1.0, 4.0, 2.0], 0.0, n, 3)


class TestEvaluateCost:
    def test_single_step_sum(self):
        net = NetworkGraph([CellParams(1.0, 0.9, 0.3, 10.0 / 3.0, 10.0)],
                           np.zeros((1, 1)), off_ramps=[0])
        cost = LinearCost.constant([1.0], [0.0], 1, 1)
        traj = simulate_traffic(net, cost, lambda n, c, k, x: [0.5], [1.0])
        assert traj.total_cost == pytest.approx(1.5)
        assert evaluate_cost(traj, cost) == pytest.approx(1.5)

    def test_control_only_cost_zero_when_idle(self, example1_net, example1_x0):
        cost = LinearCost.constant(0.0, [-1.0, -1.0, -1.0], 3, 3)
        traj = simulate_traffic(example1_net, cost,
                                lambda n, c, k, x: np.zeros(3), example1_x0)
        assert traj.total_cost == 0.0
        assert evaluate_cost(traj, cost) == 0.0

    def test_matches_lp_value_plus_offset(self, example1_net, example1_x0):
        cost = ex1_cost(1)
        traj = simulate_traffic(example1_net, cost, "centralized", example1_x0)
        hlp = build_horizon_lp(example1_net, cost, 0, example1_x0)
        sol = hlp.solve(example1_x0).require_optimal()
        assert traj.total_cost == pytest.approx(hlp.g_offset + sol.objective)
        assert evaluate_cost(traj, cost) == pytest.approx(traj.total_cost)

    def test_horizon_mismatch_rejected(self, example1_net, example1_x0):
        traj = simulate_traffic(example1_net, ex1_cost(2), "trivial",
                                example1_x0)
        with pytest.raises(ValueError):
            evaluate_cost(traj, ex1_cost(3))


class TestSimulate:
    def test_example1_evacuates_by_n8(self, example1_net, example1_x0):
        traj = simulate_traffic(example1_net, ex1_cost(8), "centralized",
                                example1_x0)
        assert traj.states[-1].sum() <= 2e-2

    def test_zero_state_stays_zero(self, example1_net):
        for scheme in ("centralized", "decentralized", "trivial"):
            traj = simulate_traffic(example1_net, ex1_cost(3), scheme,
                                    np.zeros(3))
            assert traj.total_cost == pytest.approx(0.0, abs=1e-10)
            assert np.all(np.abs(traj.states) <= 1e-10)

    def test_trivial_never_beats_centralized(self, example1_net, example1_x0):
        for n in (3, 5):
            t_triv = simulate_traffic(example1_net, ex1_cost(n), "trivial",
                                      example1_x0)
            t_cen = simulate_traffic(example1_net, ex1_cost(n), "centralized",
                                     example1_x0)
            assert t_triv.total_cost >= t_cen.total_cost - 1e-9

    def test_scheme_ordering_on_random_networks(self):
        rng = np.random.default_rng(19)
        for _ in range(8):
            net = random_network(rng, n_target=int(rng.integers(3, 7)))
            cost = random_cost(rng, net, int(rng.integers(2, 5)))
            x0 = random_state(rng, net)
            j = {s: simulate_traffic(net, cost, s, x0).total_cost
                 for s in ("centralized", "decentralized", "trivial")}
            scale = max(1.0, abs(j["centralized"]))
            assert j["centralized"] <= j["decentralized"] + 1e-8 * scale
            assert j["centralized"] <= j["trivial"] + 1e-8 * scale

    def test_unknown_scheme_rejected(self, example1_net, example1_x0):
        with pytest.raises(ValueError):
            simulate_traffic(example1_net, ex1_cost(2), "magic", example1_x0)

    def test_dispatch_traffic_and_gas(self, example1_net, example1_x0, gas4):
        traj = simulate(example1_net, "trivial", example1_x0, cost=ex1_cost(2))
        assert isinstance(traj, Trajectory)
        gtraj = simulate(gas4, "lp1-centralized", None)
        assert gtraj.horizon == gas4.horizon
        with pytest.raises(TypeError):
            simulate(object(), "trivial", example1_x0)


class TestRelativeLoss:
    def test_equal_costs(self):
        assert relative_loss(5.0, 5.0) == 0.0

    def test_arithmetic(self):
        assert relative_loss(115.0, 100.0) == pytest.approx(15.0)

    def test_zero_baseline_signals(self):
        with pytest.raises(ZeroDivisionError):
            relative_loss(1.0, 0.0)

    def test_example1_n5_loss_about_15(self, example1_net, example1_x0):
        t_dec = simulate_traffic(example1_net, ex1_cost(5), "decentralized",
                                 example1_x0)
        t_cen = simulate_traffic(example1_net, ex1_cost(5), "centralized",
                                 example1_x0)
        assert relative_loss(t_dec.total_cost, t_cen.total_cost) == \
            pytest.approx(15.0, abs=3.0)


class TestComparison:
    def test_table_and_loss(self):
        cmp = SchemeComparison({"centralized": 100.0, "decentralized": 115.0})
        assert cmp.loss("decentralized") == pytest.approx(15.0)
        table = cmp.table()
        assert "decentralized,115" in table


class TestCsvExport:
    def test_columns_and_determinism(self, example1_net, example1_x0):
        cost = ex1_cost(3)
        a = trajectory_to_csv(
            simulate_traffic(example1_net, cost, "centralized", example1_x0),
            cost)
        b = trajectory_to_csv(
            simulate_traffic(example1_net, cost, "centralized", example1_x0),
            cost)
        assert a == b  # byte-identical reruns
        header = a.splitlines()[0]
        assert header == "k,cell,x,u,y,stage_cost"
        # one row per (step, cell) plus terminal rows
        assert len(a.splitlines()) == 1 + 3 * 3 + 3

    def test_stage_cost_column_sums_to_total(self, example1_net, example1_x0):
        cost = ex1_cost(4)
        traj = simulate_traffic(example1_net, cost, "trivial", example1_x0)
        text = trajectory_to_csv(traj, cost)
        total = sum(float(line.split(",")[5])
                    for line in text.splitlines()[1:])
        assert total == pytest.approx(traj.total_cost)
