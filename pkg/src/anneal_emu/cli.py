"""Command-line interface: reproducible experiments with machine-readable output.

Commands
    enumerate   write one edge-list file per connected-graph isomorphism class
    qaoa-opt    bootstrap QAOA on a graph file, write schedule JSON + trace CSV
    poly-opt    optimize a clipped-polynomial schedule at fixed total time
    emulate     full emulation-factor pipeline for one instance
    sweep       optimizer-comparison sweep over random instances per cell

Every randomized command requires a seed (--seed or ANNEAL_EMU_SEED); output
is then a pure function of the inputs. Exit codes: 0 success, 1 usage or
parse error, 2 violated internal guarantee, 3 optimizer failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import emulation, problems, quantum, schedules
from .errors import GraphParseError, OptimizationError
from .optimize import Objective, OptimizerConfig, bootstrap_qaoa, optimize_polynomial
from .util import seeded_rng

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_GUARANTEE = 2
EXIT_OPTIMIZER = 3

SEED_ENV_VAR = "ANNEAL_EMU_SEED"

SWEEP_BASELINE = {"n": 5, "p": 2, "t_f": 1.2, "method": "powell"}
SWEEP_EDGE_PROBABILITY = 0.7
SWEEP_INSTANCES = 10


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad flags; the documented contract is 1
    def error(self, message):
        raise _UsageError(message)


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _write_trace(path, trace) -> None:
    n_params = max((len(row[2]) for row in trace), default=0)
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["iteration", "objective"] + [f"x{i}" for i in range(n_params)])
        for row_index, (_, value, params) in enumerate(trace):
            padded = [repr(float(v)) for v in params] + [""] * (n_params - len(params))
            writer.writerow([row_index, repr(value)] + padded)


def _prepare_out_dir(out, force: bool) -> str:
    os.makedirs(out, exist_ok=True)
    if not force and os.listdir(out):
        raise _UsageError(
            f"output directory {out!r} is not empty; pass --force to write anyway"
        )
    return out


def _resolve_seed(args) -> int:
    if args.seed is not None:
        return args.seed
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise _UsageError(f"{SEED_ENV_VAR}={env!r} is not an integer") from None
    raise _UsageError(f"this command is randomized: pass --seed or set {SEED_ENV_VAR}")


def _load_graph(path) -> problems.Graph:
    if not os.path.exists(path):
        raise _UsageError(f"graph file {path!r} does not exist")
    return problems.load_graph(path)


def _schedule_metrics(g, schedule, n_steps):
    energies = problems.diagonal_energies(g)
    psi = quantum.evolve_schedule(g, schedule, n_steps=n_steps)
    dist = quantum.energy_distribution(psi, energies)
    exp_value = quantum.expectation(dist)
    ratio = quantum.approximation_ratio(dist, energies)
    return exp_value, ratio


def cmd_enumerate(args) -> int:
    out = _prepare_out_dir(args.out, args.force)
    graphs = problems.enumerate_connected_graphs(args.n)
    index = []
    for k, g in enumerate(graphs):
        name = f"graph_{k:03d}.txt"
        problems.save_graph(os.path.join(out, name), g)
        index.append(
            {"file": name, "graph_id": g.graph_id(), "n_nodes": g.n_nodes, "n_edges": g.n_edges}
        )
    _write_json(os.path.join(out, "index.json"), {"n": args.n, "count": len(graphs), "graphs": index})
    print(f"wrote {len(graphs)} graphs to {out}")
    return EXIT_OK


def cmd_qaoa_opt(args) -> int:
    seed = _resolve_seed(args)
    g = _load_graph(args.graph)
    out = _prepare_out_dir(args.out, args.force)
    cfg = OptimizerConfig(seed=seed, restarts=args.restarts)
    try:
        levels = bootstrap_qaoa(g, args.p, cfg)
    except OptimizationError as exc:
        print(f"optimizer failure: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER
    level = levels[-1]
    bb = level.schedule
    energies = problems.diagonal_energies(g)
    psi = quantum.evolve_qaoa(g, bb.betas, bb.gammas)
    dist = quantum.energy_distribution(psi, energies)
    payload = {
        "graph_id": g.graph_id(),
        "p": args.p,
        "seed": seed,
        "bg": list(bb.betas) + list(bb.gammas),
        "schedule": schedules.schedule_to_json(bb),
        "T_b": bb.total_time,
        "expectation": quantum.expectation(dist),
        "approximation_ratio": quantum.approximation_ratio(dist, energies),
        "status": level.status,
        "per_depth": [
            {"p": lv.p, "expectation": lv.expectation, "T": lv.schedule.total_time, "status": lv.status}
            for lv in levels
        ],
    }
    _write_json(os.path.join(out, "qaoa_schedule.json"), payload)
    trace = [(k, lv.expectation, np.asarray(lv.schedule.durations)) for k, lv in enumerate(levels)]
    _write_trace(os.path.join(out, "trace.csv"), trace)
    print(
        "qaoa p=%d expectation=%.6f ratio=%.4f T_b=%.6f"
        % (args.p, payload["expectation"], payload["approximation_ratio"], bb.total_time)
    )
    return EXIT_OK


def cmd_poly_opt(args) -> int:
    seed = _resolve_seed(args)
    g = _load_graph(args.graph)
    out = _prepare_out_dir(args.out, args.force)
    cfg = OptimizerConfig(seed=seed, restarts=args.restarts)
    objective = Objective(graph=g, n_steps=args.steps)
    trace: list = []
    try:
        schedule = optimize_polynomial(
            g, args.p, args.tf, cfg, method=args.method, objective=objective, trace=trace
        )
    except OptimizationError as exc:
        print(f"optimizer failure: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER
    exp_value, ratio = _schedule_metrics(g, schedule, args.steps)
    payload = {
        "graph_id": g.graph_id(),
        "p": args.p,
        "seed": seed,
        "method": args.method,
        "clist": list(schedule.coeffs),
        "t_f": schedule.t_f,
        "schedule": schedules.schedule_to_json(schedule),
        "expectation": exp_value,
        "approximation_ratio": ratio,
    }
    _write_json(os.path.join(out, "poly_schedule.json"), payload)
    _write_trace(os.path.join(out, "trace.csv"), trace)
    print(
        "poly p=%d method=%s expectation=%.6f ratio=%.4f t_f=%.6f"
        % (args.p, args.method, exp_value, ratio, schedule.t_f)
    )
    return EXIT_OK


_REPORT_FIELDS = [
    "n", "p", "graph_id", "T_b", "t_star", "factor", "worst_margin", "status",
]


def _report_csv_row(report) -> list:
    return [
        report.graph.n_nodes,
        report.p,
        report.graph.graph_id(),
        "" if report.t_b is None else repr(report.t_b),
        "" if report.t_star is None else repr(report.t_star),
        "" if report.factor is None else repr(report.factor),
        "" if report.worst_margin is None else repr(report.worst_margin),
        report.status,
    ]


def cmd_emulate(args) -> int:
    seed = _resolve_seed(args)
    g = _load_graph(args.graph)
    out = _prepare_out_dir(args.out, args.force)
    cfg = emulation.EmulationConfig(seed=seed, tol=args.tol, n_steps=args.steps)
    report = emulation.emulation_factor(g, args.p, cfg)
    _write_json(os.path.join(out, "report.json"), emulation.report_to_json(report))
    with open(os.path.join(out, "report.csv"), "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(_REPORT_FIELDS)
        writer.writerow(_report_csv_row(report))
    if report.status != "finite":
        print(
            f"emulation unreachable (should not happen): {report.reason}",
            file=sys.stderr,
        )
        return EXIT_GUARANTEE
    print(
        "emulation n=%d p=%d factor=%.6f T_b=%.6f t*=%.6f"
        % (g.n_nodes, args.p, report.factor, report.t_b, report.t_star)
    )
    return EXIT_OK


def _sweep_instance(task):
    """One (cell, instance) evaluation; module-level for process pools."""
    cell, instance_index, seed, steps, restarts = task
    inst_seed = int(
        seeded_rng(seed, cell["cell_index"], instance_index).integers(0, 2**31 - 1)
    )
    g = problems.erdos_renyi(cell["n"], SWEEP_EDGE_PROBABILITY, inst_seed)
    try:
        cfg = OptimizerConfig(seed=inst_seed, restarts=restarts)
        objective = Objective(graph=g, n_steps=steps)
        schedule = optimize_polynomial(
            g, cell["p"], cell["t_f"], cfg, method=cell["method"], objective=objective
        )
        energies = problems.diagonal_energies(g)
        psi = quantum.evolve_schedule(g, schedule, n_steps=steps)
        dist = quantum.energy_distribution(psi, energies)
        ratio = quantum.approximation_ratio(dist, energies)
        return {"ok": True, "ratio": ratio}
    except Exception as exc:  # noqa: BLE001 - recorded per row
        return {"ok": False, "error": str(exc)}


def cmd_sweep(args) -> int:
    seed = _resolve_seed(args)
    out = _prepare_out_dir(args.out, args.force)
    if args.spec:
        with open(args.spec, encoding="utf-8") as f:
            spec = json.load(f)
    else:
        spec = {}
    axes = spec.get("axes", {})
    instances = int(spec.get("instances", SWEEP_INSTANCES))
    known = set(SWEEP_BASELINE)
    unknown = set(axes) - known
    if unknown:
        raise _UsageError(f"unknown sweep axes {sorted(unknown)}; valid: {sorted(known)}")

    cells = [dict(SWEEP_BASELINE)]
    for axis, values in axes.items():
        if not isinstance(values, list) or not values:
            raise _UsageError(f"axis {axis!r} must map to a nonempty list")
        cells = [dict(cell, **{axis: value}) for cell in cells for value in values]
    for index, cell in enumerate(cells):
        cell["cell_index"] = index

    tasks = [
        (cell, k, seed, args.steps, args.restarts)
        for cell in cells
        for k in range(instances)
    ]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_instance, tasks))
    else:
        results = [_sweep_instance(task) for task in tasks]

    path = os.path.join(out, "sweep.csv")
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(
            ["n", "p", "t_f", "method", "instances", "failures", "mean_ratio", "std_ratio"]
        )
        for index, cell in enumerate(cells):
            chunk = results[index * instances : (index + 1) * instances]
            ratios = [r["ratio"] for r in chunk if r["ok"]]
            failures = sum(1 for r in chunk if not r["ok"])
            mean = repr(float(np.mean(ratios))) if ratios else ""
            std = repr(float(np.std(ratios))) if ratios else ""
            writer.writerow(
                [cell["n"], cell["p"], repr(float(cell["t_f"])), cell["method"],
                 instances, failures, mean, std]
            )
    print(f"wrote {len(cells)} sweep rows to {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="anneal-emu", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, graph=True):
        if graph:
            p.add_argument("--graph", required=True, help="edge-list or .json graph file")
        p.add_argument("--seed", type=int, default=None,
                       help=f"RNG seed (falls back to {SEED_ENV_VAR})")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--force", action="store_true",
                       help="write into a non-empty output directory")

    p_enum = sub.add_parser("enumerate", help="all connected graphs on n nodes, one file per class")
    p_enum.add_argument("--n", type=int, required=True)
    p_enum.add_argument("--out", required=True)
    p_enum.add_argument("--force", action="store_true")
    p_enum.set_defaults(func=cmd_enumerate)

    p_qaoa = sub.add_parser("qaoa-opt", help="bootstrap QAOA durations on a graph")
    common(p_qaoa)
    p_qaoa.add_argument("--p", type=int, default=1, help="QAOA depth")
    p_qaoa.add_argument("--restarts", type=int, default=5)
    p_qaoa.set_defaults(func=cmd_qaoa_opt)

    p_poly = sub.add_parser("poly-opt", help="optimize a clipped-polynomial schedule")
    common(p_poly)
    p_poly.add_argument("--p", type=int, default=1, help="half the coefficient count")
    p_poly.add_argument("--tf", type=float, required=True, help="total annealing time")
    p_poly.add_argument("--steps", type=int, default=quantum.DEFAULT_N_STEPS)
    p_poly.add_argument("--method", choices=["powell", "nelder-mead", "gradient"],
                        default="powell")
    p_poly.add_argument("--restarts", type=int, default=5)
    p_poly.set_defaults(func=cmd_poly_opt)

    p_emu = sub.add_parser("emulate", help="emulation factor for one instance")
    common(p_emu)
    p_emu.add_argument("--p", type=int, default=1)
    p_emu.add_argument("--steps", type=int, default=quantum.DEFAULT_N_STEPS)
    p_emu.add_argument("--tol", type=float, default=1e-6, help="majorization slack")
    p_emu.set_defaults(func=cmd_emulate)

    p_sweep = sub.add_parser("sweep", help="optimizer-comparison sweep on random instances")
    p_sweep.add_argument("--spec", default=None,
                         help="JSON file with {axes: {n|p|t_f|method: [...]}, instances: N}")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", required=True)
    p_sweep.add_argument("--force", action="store_true")
    p_sweep.add_argument("--steps", type=int, default=quantum.DEFAULT_N_STEPS)
    p_sweep.add_argument("--restarts", type=int, default=2)
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GraphParseError as exc:
        print(f"graph parse error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OptimizationError as exc:
        print(f"optimizer failure: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
