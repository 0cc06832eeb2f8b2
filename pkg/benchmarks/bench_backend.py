"""Benchmark the numba simplex kernel against the pure-numpy fallback.

Runs each workload in a subprocess with FLOWCTRL_NUMBA forced on/off so
both paths are measured from a clean import (the flag is read once at
import time).  Usage: python benchmarks/bench_backend.py
"""

from __future__ import annotations

import json
import os
import subprocess
import sys

WORKLOAD = r"""
import json, os, time
import numpy as np
import flowctrl
from flowctrl.instances import synthetic_32cell_network, synthetic_32cell_x0, example1_network, example1_cost, EXAMPLE1_X0
from flowctrl.traffic import LinearCost, build_horizon_lp
from flowctrl.sim import simulate_traffic
from flowctrl.simplex import LinearProgram, solve_lp

results = {"backend": flowctrl.BACKEND}

# warm-up (covers jit compilation on the numba path)
solve_lp(LinearProgram(c=[-1.0, 1.0], a_ub=[[1.0, 1.0]], b_ub=[1.0]))

rng = np.random.default_rng(0)
t0 = time.perf_counter()
for _ in range(150):
    n, m = 25, 40
    a = rng.normal(size=(m, n))
    b = rng.random(m) * 2 + 0.5
    c = rng.normal(size=n)
    solve_lp(LinearProgram(c=c, a_ub=a, b_ub=b, ub=np.full(n, 3.0)))
results["random_dense_150"] = time.perf_counter() - t0

net = example1_network()
cost = example1_cost(8)
t0 = time.perf_counter()
for _ in range(10):
    simulate_traffic(net, cost, "decentralized", EXAMPLE1_X0)
results["example1_dec_rollout_x10"] = time.perf_counter() - t0

net32 = synthetic_32cell_network()
x0 = synthetic_32cell_x0(net32)
cost32 = LinearCost.constant(rng.integers(1, 7, 32).astype(float), 0.0, 20, 32)
hlp = build_horizon_lp(net32, cost32, 0, x0)
t0 = time.perf_counter()
sol = hlp.solve(x0).require_optimal()
results["corridor32_horizon20_lp"] = time.perf_counter() - t0
results["corridor32_iterations"] = sol.iterations

print(json.dumps(results))
"""


def run(backend_flag: str) -> dict:
    env = dict(os.environ, FLOWCTRL_NUMBA=backend_flag)
    out = subprocess.run([sys.executable, "-c", WORKLOAD], env=env,
                         capture_output=True, text=True, check=True)
    return json.loads(out.stdout.strip().splitlines()[-1])


def main() -> None:
    numpy_res = run("0")
    numba_res = run("1")
    keys = [k for k in numpy_res if k not in ("backend", "corridor32_iterations")]
    print(f"{'workload':32s} {'numpy [s]':>10s} {'numba [s]':>10s} {'speedup':>8s}")
    for key in keys:
        tn, tj = numpy_res[key], numba_res[key]
        print(f"{key:32s} {tn:10.3f} {tj:10.3f} {tn / tj:7.2f}x")
    print(f"(corridor LP simplex iterations: {numba_res['corridor32_iterations']})")


if __name__ == "__main__":
    main()
