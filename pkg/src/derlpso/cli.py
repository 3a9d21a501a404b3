"""Command-line front end: ``simulate``, ``estimate`` and ``benchmark``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from .bench import BenchmarkSpec, Overrides, atomic_write_text, dump_json, run_benchmark
from .errors import ConfigError, SolverFailure
from .estimator import ALGORITHMS
from .problems import EQUATIONS, Problem, get_equation, make_problem

OUT_ENV = "DERLPSO_OUT"
EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2

log = logging.getLogger("derlpso")


class UsageError(Exception):
    pass


def default_out() -> str:
    return os.environ.get(OUT_ENV, "results")


def load_json(path: str | Path):
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"{path}: {exc.strerror}") from exc
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc


def load_overrides(path: str | None) -> Overrides:
    if path is None:
        return Overrides()
    try:
        return Overrides.from_dict(load_json(path))
    except ConfigError as exc:
        raise UsageError(f"{path}: {exc}") from exc


def cmd_simulate(args) -> int:
    get_equation(args.equation)
    out = Path(args.out)
    written = 0
    for trial in range(args.trials):
        seed = args.seed + trial
        try:
            problem = make_problem(args.equation, args.points, np.random.default_rng(seed), seed=seed)
        except SolverFailure as exc:
            print(f"trial {trial}: {exc}", file=sys.stderr)
            continue
        path = out / f"{args.equation}_p{args.points}_s{seed}.json"
        atomic_write_text(path, dump_json(problem.to_dict()))
        print(path)
        written += 1
    return EXIT_OK if written else EXIT_FAILURE


def cmd_estimate(args) -> int:
    doc = load_json(args.problem)
    try:
        problem = Problem.from_dict(doc)
    except ConfigError as exc:
        raise UsageError(f"{args.problem}: {exc}") from exc
    overrides = load_overrides(args.config)
    if args.max_iterations is not None:
        overrides.swarm["max_iterations"] = args.max_iterations
    swarm, rl, integrator = overrides.build(problem)
    result = ALGORITHMS[args.algo](problem, swarm, rl, integrator, args.seed)

    stem = Path(args.problem).stem
    out = Path(args.out)
    json_path = out / f"{stem}_{args.algo}_s{args.seed}.json"
    csv_path = json_path.with_suffix(".csv")
    doc = result.to_dict()
    doc["problem"] = str(args.problem)
    doc["true_params"] = problem.true_params.tolist()
    atomic_write_text(json_path, dump_json(doc))
    lines = ["iteration,gbest_loss"]
    lines += [f"{i},{loss!r}" for i, loss in enumerate(result.loss_curve, start=1)]
    atomic_write_text(csv_path, "\n".join(lines) + "\n")
    print(json_path)
    print(f"best_loss={result.best_loss:.6e} best_params={np.array2string(result.best_params, precision=10)}")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    doc = load_json(args.spec) if args.spec else {}
    for key in ("equation", "trials", "seed", "jobs", "out", "seeding"):
        value = getattr(args, key)
        if value is not None:
            doc[key] = value
    if args.points:
        doc["points"] = args.points
    if args.algo:
        doc["algorithm"] = args.algo
    doc.setdefault("out", default_out())
    if args.config:
        doc["config"] = load_json(args.config)
    if args.max_iterations is not None:
        doc.setdefault("config", {}).setdefault("swarm", {})["max_iterations"] = args.max_iterations
    try:
        spec = BenchmarkSpec.from_dict(doc)
    except (ConfigError, TypeError) as exc:
        raise UsageError(str(exc)) from exc
    rows, manifest = run_benchmark(spec)
    for row in rows:
        print(
            f"{row.equation} points={row.points} {row.algorithm}: mean MSE {row.mean_mse:.3e} "
            f"(SD {row.sd_mse:.3e}), median {row.median_mse:.3e}, "
            f"{row.trials - row.failed_trials}/{row.trials} trials ok, {row.seconds:.1f}s"
        )
    print(Path(spec.out) / "summary.csv")
    if all(r.failed_trials == r.trials for r in rows):
        return EXIT_FAILURE
    return EXIT_OK


def _points(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("points must be positive")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="derlpso", description="Differential-equation parameter estimation with DERLPSO.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="draw parameters and write problem files")
    sim.add_argument("--equation", required=True, help=", ".join(EQUATIONS))
    sim.add_argument("--points", type=_points, required=True)
    sim.add_argument("--trials", type=int, default=1)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default=None)
    sim.set_defaults(func=cmd_simulate)

    est = sub.add_parser("estimate", help="estimate the parameters of one problem file")
    est.add_argument("problem")
    est.add_argument("--algo", choices=sorted(ALGORITHMS), default="derlpso")
    est.add_argument("--seed", type=int, default=0)
    est.add_argument("--max-iterations", type=int, default=None)
    est.add_argument("--config", default=None, help="JSON with swarm/rl/integrator overrides")
    est.add_argument("--out", default=None)
    est.set_defaults(func=cmd_estimate)

    bench = sub.add_parser("benchmark", help="run trials x grids x algorithms and summarize")
    bench.add_argument("spec", nargs="?", help="benchmark spec JSON")
    bench.add_argument("--equation", default=None)
    bench.add_argument("--points", type=_points, nargs="+", default=None)
    bench.add_argument("--trials", type=int, default=None)
    bench.add_argument("--seed", type=int, default=None)
    bench.add_argument("--algo", choices=["derlpso", "rllpso", "both"], default=None)
    bench.add_argument("--jobs", type=int, default=None)
    bench.add_argument("--seeding", choices=["shared", "independent"], default=None)
    bench.add_argument("--max-iterations", type=int, default=None)
    bench.add_argument("--config", default=None)
    bench.add_argument("--out", default=None)
    bench.set_defaults(func=cmd_benchmark)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    if getattr(args, "out", None) is None and args.command != "benchmark":
        args.out = default_out()
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"derlpso {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
