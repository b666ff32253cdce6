"""``qaoa-cluster`` command line.

Exit codes: 0 success, 2 configuration or input error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from .bayesopt import OptimizerConfig
from .clustering import DatasetError, bicluster, load_dataset
from .compiler import compile_qaoa, emit_program
from .experiment import (
    ConfigError,
    ExperimentConfig,
    SolveConfig,
    analyze,
    emit_outputs,
    load_config,
    make_instance,
    read_times_from_traces,
    run_experiment,
    solve_maxcut,
)
from .graphs import CapacityError, GraphError, load_graph
from .noise_tables import table_s1_noise
from .statevector import QaoaAngles

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

log = logging.getLogger("qaoa_cluster")


class InputError(Exception):
    pass


def _load_graph(path):
    try:
        return load_graph(path)
    except OSError as exc:
        raise InputError(f"cannot read graph {path}: {exc.strerror}") from None
    except (GraphError, json.JSONDecodeError) as exc:
        raise InputError(f"invalid graph {path}: {exc}") from None


def _noise(name, n):
    if name is None or name == "none":
        return None
    if name == "table-s1":
        return table_s1_noise(n)
    raise InputError(f"unknown noise model {name!r}")


def cmd_run(args) -> int:
    try:
        if args.config:
            cfg = load_config(args.config)
        else:
            cfg = ExperimentConfig.from_dict({"preset": args.preset})
        overrides = {}
        if args.workers is not None:
            overrides["workers"] = args.workers
        if args.noise is not None:
            overrides["noise"] = None if args.noise == "none" else args.noise
        if args.seed is not None:
            overrides["master_seed"] = args.seed
        if args.runs is not None:
            overrides["runs"] = args.runs
        for k, v in overrides.items():
            setattr(cfg, k, v)
        cfg.validate()
    except OSError as exc:
        raise InputError(f"cannot read config {args.config}: {exc.strerror}") from None
    except ConfigError as exc:
        for err in exc.errors:
            print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG

    def progress(rr):
        t = rr.result.time_to_optimum
        log.info("run %d: %s", rr.run, f"optimum at step {int(t)}" if math.isfinite(t) else "optimum not reached")

    results = run_experiment(cfg, progress)
    paths = emit_outputs(results, args.out)
    summary = json.loads(Path(args.out, "summary.json").read_text())
    print(f"{summary['reached_optimum']}/{summary['runs']} runs reached the optimum")
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_analyze(args) -> int:
    traces = Path(args.traces)
    try:
        times = read_times_from_traces(traces)
    except OSError as exc:
        raise InputError(f"cannot read traces {traces}: {exc.strerror}") from None
    except (KeyError, ValueError) as exc:
        raise InputError(f"malformed traces file {traces}: {exc}") from None
    summary_path = Path(args.summary) if args.summary else traces.with_name("summary.json")
    shots, budget, p_success = args.shots, args.budget, args.p_success
    if summary_path.exists():
        summary = json.loads(summary_path.read_text())
        shots = shots or summary["shots"]
        budget = budget or summary["budget"]
        if p_success is None and summary["instances"]:
            p_success = summary["instances"][0]["p_success"]
    if None in (shots, budget, p_success):
        raise InputError("need --shots, --budget and --p-success (or a summary.json beside the traces)")
    result = analyze([times[r] for r in sorted(times)], p_success, shots, budget)
    report = {"runs": len(times), "reached": sum(1 for t in times.values() if math.isfinite(t))}
    if result["comparison"] is not None:
        c = result["comparison"]
        report.update(ks=c.ks, n=c.n, m=c.m, alpha=c.alpha)
    print(json.dumps(report, indent=2, sort_keys=True))
    return EXIT_OK


def _solve_config(args, n) -> SolveConfig:
    return SolveConfig(
        p=args.p,
        shots=args.shots,
        budget=args.budget,
        noise=_noise(args.noise, n),
        optimizer=OptimizerConfig(early_stop=not args.no_early_stop),
    )


def cmd_solve(args) -> int:
    g = _load_graph(args.graph)
    try:
        inst = make_instance(g, Path(args.graph).stem)
        optimum = inst.optimum
    except CapacityError:
        optimum = None
    res = solve_maxcut(g, _solve_config(args, g.node_count), args.seed, optimum=optimum)
    out = {
        "bitstring": list(res.best_bitstring),
        "cut": res.best_cost,
        "optimum": optimum,
        "steps": len(res.records),
        "time_to_optimum": None if math.isinf(res.time_to_optimum) else int(res.time_to_optimum),
    }
    print(json.dumps(out, indent=2))
    return EXIT_OK


def cmd_cluster(args) -> int:
    try:
        data = load_dataset(args.data)
    except OSError as exc:
        raise InputError(f"cannot read dataset {args.data}: {exc.strerror}") from None
    except (DatasetError, json.JSONDecodeError) as exc:
        raise InputError(f"invalid dataset {args.data}: {exc}") from None
    cfg = _solve_config(args, len(data)) if args.solver == "qaoa" else None
    labels = bicluster(data, args.solver, cfg, seed=args.seed)
    text = json.dumps(labels.to_json())
    if args.out:
        Path(args.out).write_text(text + "\n")
    print(text)
    return EXIT_OK


def cmd_compile(args) -> int:
    g = _load_graph(args.graph)
    gammas = args.gamma * args.p if len(args.gamma) == 1 else args.gamma
    betas = args.beta * args.p if len(args.beta) == 1 else args.beta
    if len(gammas) != args.p or len(betas) != args.p:
        raise InputError(f"need 1 or {args.p} values for --gamma and --beta")
    program = compile_qaoa(g, QaoaAngles(gammas, betas), basis=args.basis)
    text = emit_program(program)
    if args.out:
        Path(args.out).write_text(text)
        print(f"{len(program)} instructions, two-qubit depth {program.two_qubit_depth()} -> {args.out}")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _add_solve_args(p):
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--shots", type=int, default=2500)
    p.add_argument("--budget", type=int, default=55)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", choices=["none", "table-s1"], default=None)
    p.add_argument("--no-early-stop", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaoa-cluster", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a repeated-solve experiment and write result files")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config")
    src.add_argument("--preset", choices=["19q", "randomized-instances", "fc20"])
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--seed", type=int, help="override the master seed")
    p.add_argument("--noise", choices=["none", "table-s1"])
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("analyze", help="time-to-optimum eCDF and KS test from traces.csv")
    p.add_argument("--traces", required=True)
    p.add_argument("--summary")
    p.add_argument("--p-success", type=float)
    p.add_argument("--shots", type=int)
    p.add_argument("--budget", type=int)
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("solve", help="Bayesian-optimized QAOA on one graph")
    p.add_argument("--graph", required=True)
    _add_solve_args(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("cluster", help="two-way clustering of a dataset")
    p.add_argument("--data", required=True)
    p.add_argument("--solver", choices=["qaoa", "brute_force"], default="qaoa")
    p.add_argument("--out")
    _add_solve_args(p)
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("compile", help="emit the gate program for given angles")
    p.add_argument("--graph", required=True)
    p.add_argument("--gamma", type=float, nargs="+", required=True)
    p.add_argument("--beta", type=float, nargs="+", required=True)
    p.add_argument("--p", type=int, default=1)
    p.add_argument("--basis", choices=["cnot", "cz"], default="cnot")
    p.add_argument("--out")
    p.set_defaults(func=cmd_compile)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    np.seterr(all="ignore")
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CapacityError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001
        print(f"runtime failure: {exc!r}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
