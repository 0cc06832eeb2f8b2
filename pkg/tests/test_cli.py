import json
from importlib import resources

import numpy as np
import pytest

from flowctrl.cli import main
from flowctrl.mplp import eval_pwa, law_from_dict

DATA = resources.files("flowctrl") / "data"
NET1 = str(DATA / "example1_net.json")
COST1 = str(DATA / "example1_cost.json")
GAS4 = str(DATA / "gas4.json")
NET32 = str(DATA / "net32.json")
INFLOW1 = str(DATA / "example1_inflow.json")


class TestValidate:
    def test_valid_network(self, capsys):
        assert main(["validate", NET1]) == 0
        assert "valid" in capsys.readouterr().out

    def test_bundled_corridor_valid(self):
        assert main(["validate", NET32]) == 0

    def test_invalid_network_exits_2(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        data = json.loads(open(NET1).read())
        data["cells"][1]["v"] = 100.0  # CFL violation
        bad.write_text(json.dumps(data))
        assert main(["validate", str(bad)]) == 2
        assert "cfl" in capsys.readouterr().out

    def test_unreadable_file_exits_2(self, tmp_path):
        missing = tmp_path / "nope.json"
        assert main(["validate", str(missing)]) == 2


class TestSimulate:
    @pytest.mark.parametrize("scheme", ["centralized", "decentralized",
                                        "trivial"])
    def test_schemes_produce_csv(self, tmp_path, scheme):
        out = tmp_path / "traj.csv"
        code = main(["simulate", "--net", NET1, "--cost", COST1,
                     "--scheme", scheme, "--x0", "1,0.5,0.1",
                     "--horizon", "4", "--out", str(out)])
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "k,cell,x,u,y,stage_cost"
        assert len(lines) == 1 + 4 * 3 + 3

    def test_inflow_profile_accepted(self, tmp_path):
        out = tmp_path / "traj.csv"
        code = main(["simulate", "--net", NET1, "--cost", COST1,
                     "--scheme", "centralized", "--x0", "1,0.5,0.1",
                     "--horizon", "4", "--lambda", INFLOW1,
                     "--out", str(out)])
        assert code == 0

    def test_wrong_x0_length_exits_2(self):
        assert main(["simulate", "--net", NET1, "--cost", COST1,
                     "--scheme", "trivial", "--x0", "1,2"]) == 2

    def test_stdout_default(self, capsys):
        assert main(["simulate", "--net", NET1, "--cost", COST1,
                     "--scheme", "trivial", "--x0", "0,0,0",
                     "--horizon", "2"]) == 0
        assert "k,cell,x,u,y,stage_cost" in capsys.readouterr().out


class TestSynthesize:
    def test_writes_law_file(self, tmp_path):
        out = tmp_path / "pwa.json"
        code = main(["synthesize", "--net", NET1, "--cost", COST1,
                     "--horizon", "1", "--theta-max", "1,1,1",
                     "--out", str(out)])
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["horizon"] == 1
        law = law_from_dict(payload["laws"][0])
        action = eval_pwa(law, np.array([1.0, 0.5, 0.1]))[:3]
        assert action == pytest.approx([0.0, 0.45, 0.09], abs=1e-8)


class TestGasSolve:
    def test_lp1(self, tmp_path, capsys):
        out = tmp_path / "gas.csv"
        assert main(["gas-solve", "--scenario", GAS4, "--method", "lp1",
                     "--out", str(out)]) == 0
        assert "J_lp1" in capsys.readouterr().out
        assert out.read_text().startswith("k,cell,x,u_in,u_out,stage_cost")

    def test_lp2(self, capsys):
        assert main(["gas-solve", "--scenario", GAS4, "--method", "lp2",
                     "--breakpoints", "5"]) == 0
        assert "J_lp2" in capsys.readouterr().out

    def test_infeasible_scenario_exits_1(self, tmp_path):
        data = json.loads(open(GAS4).read())
        data["demand"] = [100.0] * data["horizon"]
        bad = tmp_path / "bad_gas.json"
        bad.write_text(json.dumps(data))
        assert main(["gas-solve", "--scenario", str(bad),
                     "--method", "lp1"]) == 1


class TestCheckThm3:
    def test_example1_cost_reports_failure(self, capsys):
        assert main(["check-thm3", "--net", NET1, "--cost", COST1]) == 0
        out = capsys.readouterr().out
        assert "FAIL" in out and "not guaranteed" in out

    def test_uniform_cost_reports_pass(self, tmp_path, capsys):
        cost = tmp_path / "uniform.json"
        cost.write_text(json.dumps({"horizon": 4, "alpha": 1.0, "beta": 0.0}))
        assert main(["check-thm3", "--net", NET1, "--cost", str(cost)]) == 0
        out = capsys.readouterr().out
        assert "guaranteed" in out and "not guaranteed" not in out


class TestExperiment:
    def test_sim1_writes_outputs(self, tmp_path, capsys):
        assert main(["experiment", "sim1", "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "sim1.csv").exists()
        assert "eps" in capsys.readouterr().out

    def test_random_loss_small(self, tmp_path, capsys):
        assert main(["experiment", "random-loss", "--trials", "2",
                     "--seed", "3", "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "random_loss.csv").exists()
        assert "share below 2%" in capsys.readouterr().out

    def test_gas_demo(self, tmp_path, capsys):
        assert main(["experiment", "gas-demo", "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "gas_demo.csv").exists()
        assert "J_lp1_centralized" in capsys.readouterr().out
