"""Command-line interface.

Exit codes: 0 success, 1 infeasible problem, 2 invalid input.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .gas import load_gas, simulate_gas, build_lp1, solve_lp2_value
from .mplp import law_to_dict
from .network import load_inflow, load_network, validate_network
from .sim import TRAFFIC_SCHEMES, simulate_traffic, trajectory_to_csv
from .simplex import InfeasibleError, LpError
from .traffic import (check_thm3_conditions, cost_from_dict,
                      synthesize_explicit)
from .mplp import Polyhedron

EXIT_OK = 0
EXIT_INFEASIBLE = 1
EXIT_INVALID = 2


class CliInputError(Exception):
    pass


def _load_net(path):
    try:
        return load_network(path)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read network file {path}: {exc}") from exc


def _load_cost(path, n_cells, horizon=None):
    try:
        with open(path) as fh:
            data = json.load(fh)
        if horizon is not None:
            data["horizon"] = int(horizon)
        return cost_from_dict(data, n_cells)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read cost file {path}: {exc}") from exc


def _parse_x0(text, n_cells):
    try:
        values = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise CliInputError(f"cannot parse --x0 {text!r}") from exc
    if len(values) != n_cells:
        raise CliInputError(f"--x0 has {len(values)} entries for {n_cells} cells")
    return np.asarray(values)


def _cmd_validate(args):
    net = _load_net(args.net_file)
    report = validate_network(net)
    print(report)
    return EXIT_OK if report.ok else EXIT_INVALID


def _cmd_simulate(args):
    net = _load_net(args.net)
    report = validate_network(net)
    if not report.ok:
        print(report, file=sys.stderr)
        return EXIT_INVALID
    cost = _load_cost(args.cost, net.n_cells, args.horizon)
    x0 = _parse_x0(args.x0, net.n_cells)
    lam = None
    if getattr(args, "lambda_file", None):
        try:
            lam = load_inflow(args.lambda_file, net, n_steps=cost.horizon)
        except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
            raise CliInputError(f"cannot read inflow file: {exc}") from exc
    traj = simulate_traffic(net, cost, args.scheme, x0, lam=lam,
                            controller_lambda=lam if args.known_lambda else None)
    csv_text = trajectory_to_csv(traj, cost)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
    else:
        sys.stdout.write(csv_text)
    print(f"# scheme={traj.scheme} J={traj.total_cost:.12g} seed={args.seed}",
          file=sys.stderr)
    return EXIT_OK


def _cmd_synthesize(args):
    net = _load_net(args.net)
    cost = _load_cost(args.cost, net.n_cells, args.horizon)
    theta_box = None
    if args.theta_max:
        hi = _parse_x0(args.theta_max, net.n_cells)
        theta_box = Polyhedron.box(np.zeros(net.n_cells), hi)
    laws = synthesize_explicit(net, cost, theta_box=theta_box)
    payload = {"horizon": cost.horizon,
               "laws": [law_to_dict(law) for law in laws]}
    with open(args.out, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    sizes = ", ".join(str(law.n_regions) for law in laws)
    print(f"wrote {len(laws)} laws ({sizes} regions) to {args.out}")
    return EXIT_OK


def _cmd_gas_solve(args):
    try:
        gas = load_gas(args.scenario)
    except (OSError, KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CliInputError(f"cannot read scenario {args.scenario}: {exc}") from exc
    if args.method == "lp1":
        hlp = build_lp1(gas, 0, gas.x0)
        sol = hlp.solve(gas.x0).require_optimal()
        traj = simulate_gas(gas, "lp1-centralized")
        print(f"J_lp1 = {hlp.g_offset + sol.objective:.12g}")
        print(f"rollout J = {traj.total_cost:.12g}, nonconvex feasibility "
              f"violations: {len(traj.feasibility.violations)}")
        if args.out:
            from .gas import gas_trajectory_to_csv

            with open(args.out, "w") as fh:
                fh.write(gas_trajectory_to_csv(traj, gas))
    else:
        value, bound = solve_lp2_value(gas, 0, gas.x0, args.breakpoints)
        print(f"J_lp2 (m={args.breakpoints}) = {value:.12g} "
              f"(interpolation error bound {bound:.3g})")
    return EXIT_OK


def _cmd_check_thm3(args):
    net = _load_net(args.net)
    cost = _load_cost(args.cost, net.n_cells, args.horizon)
    report = check_thm3_conditions(net, cost)
    print(report)
    print("trivial control optimal: "
          + ("guaranteed" if report.all_passed else "not guaranteed"))
    return EXIT_OK


def _cmd_experiment(args):
    from . import experiments

    if args.which == "sim1":
        result = experiments.run_sim1(out_dir=args.out_dir)
        for r in result.rows:
            print(f"N={r['N']:2d} J_unc={r['J_uncontrolled']:.5f} "
                  f"J_dec={r['J_decentralized']:.5f} "
                  f"J_cen={r['J_centralized']:.5f} eps={r['eps_dec_pct']:.4f}%")
    elif args.which == "random-loss":
        result = experiments.run_random_loss(trials=args.trials, seed=args.seed,
                                             out_dir=args.out_dir)
        print(result.summary(), end="")
    else:
        result = experiments.run_gas_demo(out_dir=args.out_dir)
        print(result.csv(), end="")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="flowctrl",
        description="Finite-horizon optimal feedback flow control for "
                    "transport networks")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a network file's invariants")
    p.add_argument("net_file")
    p.set_defaults(func=_cmd_validate)

    p = sub.add_parser("simulate", help="closed-loop rollout of a control scheme")
    p.add_argument("--net", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--scheme", required=True, choices=TRAFFIC_SCHEMES)
    p.add_argument("--x0", required=True, help="comma-separated initial masses")
    p.add_argument("--horizon", type=int, default=None,
                   help="override the cost file's horizon")
    p.add_argument("--lambda", dest="lambda_file", default=None,
                   help="exogenous inflow profile file")
    p.add_argument("--known-lambda", action="store_true",
                   help="let the controller use the inflow profile "
                        "(default: zero-inflow law)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="trajectory CSV path (default stdout)")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("synthesize",
                       help="explicit piecewise-affine feedback laws via "
                            "multi-parametric LP")
    p.add_argument("--net", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.add_argument("--theta-max", default=None,
                   help="comma-separated upper corner of the parameter box")
    p.set_defaults(func=_cmd_synthesize)

    p = sub.add_parser("gas-solve", help="solve a gas pipeline scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--method", required=True, choices=("lp1", "lp2"))
    p.add_argument("--breakpoints", type=int, default=9)
    p.add_argument("--out", default=None, help="LP1 trajectory CSV path")
    p.set_defaults(func=_cmd_gas_solve)

    p = sub.add_parser("check-thm3",
                       help="report the trivial-control optimality conditions")
    p.add_argument("--net", required=True)
    p.add_argument("--cost", required=True)
    p.add_argument("--horizon", type=int, default=None)
    p.set_defaults(func=_cmd_check_thm3)

    p = sub.add_parser("experiment", help="run a bundled experiment")
    p.add_argument("which", choices=("sim1", "random-loss", "gas-demo"))
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-dir", default=None)
    p.set_defaults(func=_cmd_experiment)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliInputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except InfeasibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except LpError as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
