"""Scripted experiments: the 3-cell horizon sweep, randomized
decentralization-loss trials on the 32-cell network, and the gas
LP1/LP2 demonstration.

Every run records its seed and full configuration; re-running with the
same record reproduces the output files byte for byte.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass, field

import numpy as np

from .gas import (GasLineNetwork, build_lp1, simulate_gas, solve_lp2_value,
                  suboptimality_gap)
from .instances import (EXAMPLE1_X0, example1_cost, example1_network,
                        gas_4cell_scenario, synthetic_32cell_network,
                        synthetic_32cell_x0)
from .network import NetworkGraph
from .sim import relative_loss, simulate_traffic
from .traffic import LinearCost, build_horizon_lp


@dataclass
class ExperimentSpec:
    experiment: str
    params: dict
    seed: int | None = None

    def __post_init__(self):
        if int(self.params.get("trials", 1)) < 1:
            raise ValueError("trial count must be at least 1")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"


def _write(out_dir, name, text):
    if out_dir is None:
        return None
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, name)
    with open(path, "w") as fh:
        fh.write(text)
    return path


def _fmt(v) -> str:
    return f"{v:.17g}"


# ---------------------------------------------------------------------------
# Simulation 1: 3-cell horizon sweep
# ---------------------------------------------------------------------------

@dataclass
class Sim1Result:
    spec: ExperimentSpec
    rows: list[dict] = field(default_factory=list)

    def csv(self) -> str:
        header = ("N,J_uncontrolled,J_decentralized,J_centralized,"
                  "eps_dec_pct,eps_unc_pct,evac_mass_cen,evac_mass_dec")
        lines = [header]
        for r in self.rows:
            lines.append(",".join([
                str(r["N"]), _fmt(r["J_uncontrolled"]), _fmt(r["J_decentralized"]),
                _fmt(r["J_centralized"]), _fmt(r["eps_dec_pct"]),
                _fmt(r["eps_unc_pct"]), _fmt(r["evac_mass_cen"]),
                _fmt(r["evac_mass_dec"]),
            ]))
        return "\n".join(lines) + "\n"


def run_sim1(horizons=range(1, 11), out_dir=None) -> Sim1Result:
    """Sweep the control horizon on the 3-cell example and compare the
    uncontrolled, decentralized one-hop, and centralized schemes."""
    net = example1_network()
    x0 = EXAMPLE1_X0
    spec = ExperimentSpec("sim1", {"horizons": list(horizons),
                                   "x0": x0.tolist()})
    result = Sim1Result(spec)
    for big_n in horizons:
        cost = example1_cost(big_n)
        t_unc = simulate_traffic(net, cost, "trivial", x0)
        t_dec = simulate_traffic(net, cost, "decentralized", x0)
        t_cen = simulate_traffic(net, cost, "centralized", x0)
        result.rows.append({
            "N": int(big_n),
            "J_uncontrolled": t_unc.total_cost,
            "J_decentralized": t_dec.total_cost,
            "J_centralized": t_cen.total_cost,
            "eps_dec_pct": relative_loss(t_dec.total_cost, t_cen.total_cost),
            "eps_unc_pct": relative_loss(t_unc.total_cost, t_cen.total_cost),
            "evac_mass_cen": float(t_cen.states[-1].sum()),
            "evac_mass_dec": float(t_dec.states[-1].sum()),
        })
    _write(out_dir, "sim1.csv", result.csv())
    _write(out_dir, "sim1_config.json", spec.to_json())
    if out_dir is not None:
        lines = ["3-cell horizon sweep (uncontrolled vs one-hop decentralized vs centralized)"]
        for r in result.rows:
            lines.append(
                f"N={r['N']:2d}: J_unc={r['J_uncontrolled']:.5f} "
                f"J_dec={r['J_decentralized']:.5f} J_cen={r['J_centralized']:.5f} "
                f"eps_dec={r['eps_dec_pct']:.4f}%")
        _write(out_dir, "sim1_summary.txt", "\n".join(lines) + "\n")
    return result


# ---------------------------------------------------------------------------
# Simulation 2 methodology: random weighting vectors on the 32-cell network
# ---------------------------------------------------------------------------

@dataclass
class RandomLossResult:
    spec: ExperimentSpec
    eps: np.ndarray
    alphas: np.ndarray
    hist_counts: np.ndarray
    hist_edges: np.ndarray

    @property
    def share_below_2pct(self) -> float:
        return float(np.mean(self.eps < 2.0))

    def csv(self) -> str:
        lines = ["trial,eps_pct,alpha"]
        for t, (e, a) in enumerate(zip(self.eps, self.alphas)):
            alpha_str = " ".join(str(int(v)) for v in a)
            lines.append(f"{t},{_fmt(e)},{alpha_str}")
        return "\n".join(lines) + "\n"

    def summary(self) -> str:
        e = self.eps
        lines = [
            "random weighting-vector decentralization loss",
            f"trials: {e.size}",
            f"eps min/median/max (%): {_fmt(e.min())} / {_fmt(float(np.median(e)))} / {_fmt(e.max())}",
            f"share below 2%: {self.share_below_2pct:.3f}",
            "histogram (edges -> count):",
        ]
        for i, c in enumerate(self.hist_counts):
            lines.append(f"  [{_fmt(self.hist_edges[i])}, {_fmt(self.hist_edges[i + 1])}): {int(c)}")
        return "\n".join(lines) + "\n"


def run_random_loss(net: NetworkGraph | None = None, trials: int = 100,
                    weight_range=(1, 6), seed: int = 0, horizon: int = 20,
                    x0=None, out_dir=None) -> RandomLossResult:
    """Draw random integer state weights, compare the centralized optimum
    against the decentralized one-hop rollout, and histogram the relative
    loss.

    The centralized cost is the horizon LP optimum at the initial state
    (its closed-loop rollout realizes exactly this value under zero
    inflow); the decentralized cost is a closed-loop rollout.
    """
    net = net or synthetic_32cell_network()
    x0 = synthetic_32cell_x0(net) if x0 is None else np.asarray(x0, dtype=float)
    spec = ExperimentSpec("random-loss", {
        "trials": int(trials),
        "weight_range": [int(weight_range[0]), int(weight_range[1])],
        "horizon": int(horizon),
        "n_cells": net.n_cells,
        "x0": x0.tolist(),
    }, seed=seed)
    rng = np.random.default_rng(seed)
    eps = np.zeros(trials)
    alphas = np.zeros((trials, net.n_cells), dtype=int)
    for t in range(trials):
        alpha = rng.integers(weight_range[0], weight_range[1] + 1, net.n_cells)
        alphas[t] = alpha
        cost = LinearCost.constant(alpha.astype(float), 0.0, horizon, net.n_cells)
        hlp = build_horizon_lp(net, cost, 0, x0)
        sol = hlp.solve(x0).require_optimal()
        j_cen = hlp.g_offset + sol.objective
        t_dec = simulate_traffic(net, cost, "decentralized", x0)
        eps[t] = relative_loss(t_dec.total_cost, j_cen)
    counts, edges = np.histogram(eps, bins=20)
    result = RandomLossResult(spec, eps, alphas, counts, edges)
    _write(out_dir, "random_loss.csv", result.csv())
    _write(out_dir, "random_loss_config.json", spec.to_json())
    _write(out_dir, "random_loss_summary.txt", result.summary())
    return result


# ---------------------------------------------------------------------------
# Gas demonstration
# ---------------------------------------------------------------------------

@dataclass
class GasDemoResult:
    spec: ExperimentSpec
    j_lp1_cen: float
    j_lp1_dec: float
    lp2_values: dict          # m -> (value, error bound)
    gaps: dict                # m -> relative LP1-vs-LP2 gap
    feasibility_violations: int

    def csv(self) -> str:
        lines = ["quantity,m,value"]
        lines.append(f"J_lp1_centralized,,{_fmt(self.j_lp1_cen)}")
        lines.append(f"J_lp1_decentralized,,{_fmt(self.j_lp1_dec)}")
        for m in sorted(self.lp2_values):
            v, eb = self.lp2_values[m]
            lines.append(f"J_lp2,{m},{_fmt(v)}")
            lines.append(f"lp2_error_bound,{m},{_fmt(eb)}")
            lines.append(f"gap_lp1_vs_lp2,{m},{_fmt(self.gaps[m])}")
        lines.append(f"nonconvex_feasibility_violations,,{self.feasibility_violations}")
        return "\n".join(lines) + "\n"


def run_gas_demo(scenario: GasLineNetwork | None = None,
                 breakpoints=(3, 5, 9, 17), out_dir=None) -> GasDemoResult:
    """Solve the pipeline scenario with LP1 (centralized and one-hop
    decentralized rollouts) and LP2 at several breakpoint counts, report
    the convexification gaps and the nonconvex feasibility audit."""
    gas = scenario or gas_4cell_scenario()
    spec = ExperimentSpec("gas-demo", {
        "breakpoints": list(breakpoints),
        "n_cells": gas.n_cells,
        "horizon": gas.horizon,
    })
    t_cen = simulate_gas(gas, "lp1-centralized")
    t_dec = simulate_gas(gas, "lp1-decentralized")
    hlp = build_lp1(gas, 0, gas.x0)
    sol = hlp.solve(gas.x0).require_optimal()
    j_lp1 = hlp.g_offset + sol.objective
    lp2_values = {}
    gaps = {}
    for m in breakpoints:
        v, eb = solve_lp2_value(gas, 0, gas.x0, m)
        lp2_values[int(m)] = (v, eb)
        gaps[int(m)] = suboptimality_gap(j_lp1, v)
    violations = len(t_cen.feasibility.violations) + len(t_dec.feasibility.violations)
    result = GasDemoResult(spec, j_lp1, t_dec.total_cost, lp2_values, gaps,
                           violations)
    _write(out_dir, "gas_demo.csv", result.csv())
    _write(out_dir, "gas_demo_config.json", spec.to_json())
    return result
