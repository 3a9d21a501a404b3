"""Benchmark orchestration: trials x grid sizes x algorithms, with CSV/JSON output."""

from __future__ import annotations

import csv
import dataclasses
import io
import json
import logging
import math
import os
import tempfile
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError, SolverFailure
from .estimator import ALGORITHMS, swarm_config_for
from .ode import IntegratorConfig
from .problems import FORMAT_VERSION, get_equation, make_problem
from .qlearning import RLConfig

log = logging.getLogger(__name__)

# offset applied to the estimation seed of the second algorithm in "independent" mode
INDEPENDENT_SEED_STRIDE = 1_000_003


@dataclass
class Overrides:
    """Partial configuration layered over the per-equation defaults."""

    swarm: dict[str, Any] = field(default_factory=dict)
    rl: dict[str, Any] = field(default_factory=dict)
    integrator: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict[str, Any] | None) -> Overrides:
        doc = doc or {}
        unknown = set(doc) - {"swarm", "rl", "integrator"}
        if unknown:
            raise ConfigError(f"unknown config sections: {', '.join(sorted(unknown))}")
        return cls(dict(doc.get("swarm", {})), dict(doc.get("rl", {})), dict(doc.get("integrator", {})))

    def build(self, problem):
        try:
            swarm = swarm_config_for(problem, **self.swarm)
            rl = RLConfig(**self.rl)
            integrator = IntegratorConfig(**self.integrator) if self.integrator else None
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc
        return swarm, rl, integrator

    def to_dict(self) -> dict[str, Any]:
        return dataclasses.asdict(self)


@dataclass
class BenchmarkSpec:
    equation: str
    points: list[int]
    trials: int = 10
    seed: int = 0
    algorithms: list[str] = field(default_factory=lambda: ["derlpso"])
    out: str = "results"
    jobs: int = 1
    seeding: str = "shared"  # or "independent"
    overrides: Overrides = field(default_factory=Overrides)

    def __post_init__(self):
        get_equation(self.equation)
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.points:
            raise ConfigError("points list must be nonempty")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {a!r}")
        if self.seeding not in ("shared", "independent"):
            raise ConfigError("seeding must be 'shared' or 'independent'")

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> BenchmarkSpec:
        doc = dict(doc)
        algo = doc.pop("algorithm", None)
        if algo is not None:
            doc["algorithms"] = ["derlpso", "rllpso"] if algo == "both" else [algo]
        if "equation" not in doc or "points" not in doc:
            raise ConfigError("benchmark spec needs 'equation' and 'points'")
        doc["overrides"] = Overrides.from_dict(doc.pop("config", None))
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown benchmark keys: {', '.join(sorted(unknown))}")
        if isinstance(doc["points"], int):
            doc["points"] = [doc["points"]]
        return cls(**doc)


@dataclass
class SummaryRow:
    equation: str
    points: int
    algorithm: str
    param_names: tuple[str, ...]
    param_mse: list[float]
    param_sd: list[float]
    mean_mse: float
    sd_mse: float
    median_mse: float
    trials: int
    failed_trials: int
    seconds: float

    def as_record(self) -> dict[str, Any]:
        rec = {
            "equation": self.equation,
            "points": self.points,
            "algorithm": self.algorithm,
            "trials": self.trials,
            "failed_trials": self.failed_trials,
            "mean_mse": self.mean_mse,
            "sd_mse": self.sd_mse,
            "median_mse": self.median_mse,
        }
        for name, m, s in zip(self.param_names, self.param_mse, self.param_sd):
            rec[f"mse_{name}"] = m
            rec[f"sd_{name}"] = s
        rec["seconds"] = self.seconds
        return rec


def sample_sd(values) -> float:
    """Sample standard deviation; a single trial reports 0."""
    values = np.asarray(values, dtype=float)
    return float(np.std(values, ddof=1)) if values.size > 1 else 0.0


def run_trial(
    equation: str,
    points: int,
    trial: int,
    seed_base: int,
    algorithms: list[str],
    overrides: Overrides,
    seeding: str = "shared",
) -> dict[str, Any]:
    """Generate one problem and estimate it with every requested algorithm."""
    problem_seed = seed_base + trial
    record: dict[str, Any] = {"trial": trial, "problem_seed": problem_seed, "runs": {}}
    try:
        problem = make_problem(equation, points, np.random.default_rng(problem_seed), seed=problem_seed)
    except SolverFailure as exc:
        record["error"] = str(exc)
        return record
    record["true_params"] = problem.true_params.tolist()
    record["redraws"] = problem.redraws
    swarm, rl, integrator = overrides.build(problem)
    for k, algo in enumerate(algorithms):
        seed = problem_seed if seeding == "shared" else problem_seed + k * INDEPENDENT_SEED_STRIDE
        start = time.perf_counter()
        try:
            result = ALGORITHMS[algo](problem, swarm, rl, integrator, seed)
        except ConfigError:
            raise
        except Exception as exc:  # one broken trial must not sink the whole benchmark
            log.exception("trial %d (%s) failed", trial, algo)
            record.setdefault("errors", {})[algo] = repr(exc)
            continue
        elapsed = time.perf_counter() - start
        sq_err = (result.best_params - problem.true_params) ** 2
        record["runs"][algo] = {
            "seed": seed,
            "best_params": result.best_params.tolist(),
            "best_loss": result.best_loss if math.isfinite(result.best_loss) else None,
            "squared_errors": sq_err.tolist(),
            "mse": float(sq_err.mean()),
            "reinit_iteration": result.reinit_iteration,
            "loss_curve": result.loss_curve,
            "seconds": elapsed,
        }
    return record


def summarize(equation: str, points: int, algorithm: str, records: list[dict[str, Any]]) -> SummaryRow:
    names = get_equation(equation).param_names
    runs = [r["runs"][algorithm] for r in records if algorithm in r.get("runs", {})]
    failed = len(records) - len(runs)
    if runs:
        sq = np.array([run["squared_errors"] for run in runs])
        mses = sq.mean(axis=1)
        param_mse = sq.mean(axis=0).tolist()
        param_sd = [sample_sd(sq[:, i]) for i in range(sq.shape[1])]
        mean_mse, sd_mse, median_mse = float(mses.mean()), sample_sd(mses), float(np.median(mses))
    else:
        param_mse = param_sd = [math.nan] * len(names)
        mean_mse = sd_mse = median_mse = math.nan
    return SummaryRow(
        equation=equation,
        points=points,
        algorithm=algorithm,
        param_names=names,
        param_mse=param_mse,
        param_sd=param_sd,
        mean_mse=mean_mse,
        sd_mse=sd_mse,
        median_mse=median_mse,
        trials=len(records),
        failed_trials=failed,
        seconds=float(sum(run["seconds"] for run in runs)),
    )


def atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def dump_json(doc: Any) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def summary_csv(rows: list[SummaryRow]) -> str:
    buf = io.StringIO()
    records = [r.as_record() for r in rows]
    writer = csv.DictWriter(buf, fieldnames=list(records[0]), lineterminator="\n")
    writer.writeheader()
    writer.writerows(records)
    return buf.getvalue()


def run_benchmark(spec: BenchmarkSpec) -> tuple[list[SummaryRow], dict[str, Any]]:
    """Run every (points, trial) cell and write ``summary.csv`` + ``manifest.json``."""
    out = Path(spec.out)
    tasks = [
        (spec.equation, pts, trial, spec.seed, spec.algorithms, spec.overrides, spec.seeding)
        for pts in spec.points
        for trial in range(spec.trials)
    ]
    if spec.jobs > 1:
        with ProcessPoolExecutor(max_workers=spec.jobs) as pool:
            futures = [pool.submit(run_trial, *t) for t in tasks]
            results = [f.result() for f in futures]
    else:
        results = []
        for t in tasks:
            results.append(run_trial(*t))
            log.info("%s points=%d trial=%d done", t[0], t[1], t[2])

    rows = []
    by_points: dict[int, list] = {}
    for task, rec in zip(tasks, results):
        by_points.setdefault(task[1], []).append(rec)
    for pts in spec.points:
        for algo in spec.algorithms:
            rows.append(summarize(spec.equation, pts, algo, by_points[pts]))

    manifest = {
        "version": FORMAT_VERSION,
        "equation": spec.equation,
        "points": list(spec.points),
        "trials": spec.trials,
        "seed": spec.seed,
        "seeding": spec.seeding,
        "algorithms": list(spec.algorithms),
        "config": spec.overrides.to_dict(),
        "records": {str(p): by_points[p] for p in spec.points},
        "summary": [r.as_record() for r in rows],
    }
    atomic_write_text(out / "summary.csv", summary_csv(rows))
    atomic_write_text(out / "manifest.json", dump_json(_json_safe(manifest)))
    return rows, manifest


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    return obj

