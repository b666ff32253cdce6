"""Repeated Bayesian-optimized QAOA solves, null-model statistics and output files.

Seeding: every number drawn in an experiment comes from NumPy's PCG64
seeded through ``SeedSequence``. Run ``r`` of master seed ``s`` owns the
substream ``SeedSequence(s, spawn_key=(r,))``; inside a run the optimizer
uses child ``(r, 0)`` and the shots of step ``t`` use ``(r, 1, t)``. Results
therefore do not depend on worker count or scheduling order.
"""

from __future__ import annotations

import csv
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .bayesopt import OptimizerConfig, optimize
from .clustering import Dataset, euclidean_distance_matrix
from .graphs import (
    WeightedGraph,
    brute_force_maxcut,
    load_graph,
    random_graph,
    random_weights,
    topology_19q,
)
from .noise_tables import table_s1_noise
from .sampling import STATISTICS, evaluate_distribution, statistic
from .statevector import NoiseModel, QaoaAngles, cut_table

log = logging.getLogger(__name__)

OPTIMUM_TOL = 1e-9


class ConfigError(ValueError):
    """Invalid experiment configuration; ``errors`` lists ``path: message``."""

    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# --- single solve ---------------------------------------------------------------


@dataclass
class SolveConfig:
    p: int = 1
    shots: int = 2500
    budget: int = 55
    statistic: str = "max"
    noise: NoiseModel | None = None
    optimizer: OptimizerConfig = field(default_factory=OptimizerConfig)


@dataclass
class TraceRecord:
    step: int
    gammas: tuple[float, ...]
    betas: tuple[float, ...]
    best_cost: float
    mean_cost: float
    historic_best: float
    normalized_historic_best: float


@dataclass
class SolveResult:
    records: list[TraceRecord]
    best_bitstring: tuple[int, ...]
    best_cost: float
    optimum: float | None
    step_costs: list[tuple[np.ndarray, np.ndarray]] = field(repr=False, default_factory=list)

    @property
    def time_to_optimum(self) -> float:
        """First step whose historic best is the optimum, ``inf`` if never."""
        for rec in self.records:
            if rec.normalized_historic_best >= 1 - OPTIMUM_TOL:
                return float(rec.step)
        return math.inf


def run_seed(master_seed: int, run_index: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(master_seed, spawn_key=(run_index,))


def solve_maxcut(
    g: WeightedGraph,
    config: SolveConfig,
    seed: int | np.random.SeedSequence,
    optimum: float | None = None,
    keep_costs: bool = False,
) -> SolveResult:
    """One Bayesian-optimized QAOA solve of ``g``.

    Objective values are normalized by ``optimum`` when known (and the run
    stops once it is sampled, if early stopping is on), otherwise by the
    total edge weight.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    key = tuple(ss.spawn_key)
    opt_seed = np.random.SeedSequence(ss.entropy, spawn_key=key + (0,))
    scale = optimum if optimum else max(g.total_weight, 1e-300)
    samples = []

    def objective(theta):
        step = len(samples)
        shot_seed = np.random.SeedSequence(ss.entropy, spawn_key=key + (1, step))
        s = evaluate_distribution(g, QaoaAngles.from_vector(theta), config.shots, shot_seed, config.noise)
        samples.append(s)
        return statistic(s, config.statistic) / scale

    target = 1 - OPTIMUM_TOL if optimum else None
    trace = optimize(objective, config.budget, config.optimizer, opt_seed, 2 * config.p, target)
    records = []
    best_raw, best_sample = -math.inf, None
    for step, (theta, s) in enumerate(zip(trace.thetas, samples), start=1):
        angles = QaoaAngles.from_vector(theta)
        top = float(np.max(s.values))
        if top > best_raw:
            best_raw, best_sample = top, s
        records.append(
            TraceRecord(
                step=step,
                gammas=angles.gammas,
                betas=angles.betas,
                best_cost=top,
                mean_cost=s.mean,
                historic_best=best_raw,
                normalized_historic_best=best_raw / scale,
            )
        )
    step_costs = []
    if keep_costs:
        step_costs = [np.unique(s.values, return_counts=True) for s in samples]
    return SolveResult(records, best_sample.best_bitstring, best_raw, optimum, step_costs)


# --- experiment configuration -----------------------------------------------------

PRESETS: dict[str, dict] = {
    "19q": {
        "name": "19q",
        "graph": {"source": "19q", "weight_seeds": [0]},
        "p": 1,
        "shots": 2500,
        "budget": 55,
        "runs": 20,
        "master_seed": 2018,
    },
    "randomized-instances": {
        "name": "randomized-instances",
        "graph": {"source": "19q", "weight_seeds": [1, 2, 3, 4, 5]},
        "p": 1,
        "shots": 2500,
        "budget": 55,
        "runs": 25,
        "master_seed": 2018,
    },
    "fc20": {
        "name": "fc20",
        "graph": {
            "source": "gaussian_clusters",
            "n_per_cluster": 10,
            "separation": 5.0,
            "radius": 0.5,
            "seed": 0,
        },
        "p": 1,
        "shots": 250,
        "budget": 55,
        "runs": 10,
        "master_seed": 2018,
    },
}

_GRAPH_SOURCES = ("19q", "file", "random", "gaussian_clusters")
_OPTIMIZER_FIELDS = {f: type(v) for f, v in asdict(OptimizerConfig()).items()}


@dataclass
class ExperimentConfig:
    name: str = "experiment"
    graph: dict = field(default_factory=lambda: {"source": "19q", "weight_seeds": [0]})
    p: int = 1
    shots: int = 2500
    budget: int = 55
    runs: int = 20
    master_seed: int = 0
    noise: str | dict | None = None
    statistic: str = "max"
    optimizer: dict = field(default_factory=dict)
    workers: int = 1

    @classmethod
    def from_dict(cls, data: dict, base_dir: str | Path | None = None) -> "ExperimentConfig":
        if not isinstance(data, dict):
            raise ConfigError(["<root>: config must be a JSON object"])
        preset = data.get("preset")
        merged: dict = {}
        errors: list[str] = []
        if preset is not None:
            if preset not in PRESETS:
                errors.append(f"preset: unknown preset {preset!r}; choose from {sorted(PRESETS)}")
            else:
                merged.update(json.loads(json.dumps(PRESETS[preset])))
        merged.update({k: v for k, v in data.items() if k != "preset"})
        known = set(cls.__dataclass_fields__)
        for key in merged:
            if key not in known:
                errors.append(f"{key}: unknown field")
        if errors:
            raise ConfigError(errors)
        cfg = cls(**merged)
        if base_dir is not None and isinstance(cfg.graph, dict) and cfg.graph.get("source") == "file":
            path = Path(cfg.graph.get("path", ""))
            if not path.is_absolute():
                cfg.graph = dict(cfg.graph, path=str(Path(base_dir) / path))
        cfg.validate()
        return cfg

    def validate(self) -> None:
        errors = []

        def positive_int(name, value, minimum=1):
            if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
                errors.append(f"{name}: must be an integer >= {minimum}")

        positive_int("p", self.p)
        positive_int("shots", self.shots)
        positive_int("budget", self.budget)
        positive_int("runs", self.runs, 0)
        positive_int("workers", self.workers)
        if isinstance(self.master_seed, bool) or not isinstance(self.master_seed, int) or self.master_seed < 0:
            errors.append("master_seed: must be a non-negative integer")
        if self.statistic not in STATISTICS:
            errors.append(f"statistic: must be one of {list(STATISTICS)}")
        g = self.graph
        if not isinstance(g, dict):
            errors.append("graph: must be an object")
        else:
            source = g.get("source")
            if source not in _GRAPH_SOURCES:
                errors.append(f"graph.source: must be one of {list(_GRAPH_SOURCES)}")
            if source in ("19q", "random"):
                seeds = g.get("weight_seeds", [0])
                if not isinstance(seeds, list) or not seeds or not all(
                    isinstance(s, int) and not isinstance(s, bool) for s in seeds
                ):
                    errors.append("graph.weight_seeds: must be a non-empty list of integers")
            if source == "random":
                n = g.get("n")
                if not isinstance(n, int) or not 2 <= n <= 24:
                    errors.append("graph.n: must be an integer in [2, 24]")
            if source == "file" and not isinstance(g.get("path"), str):
                errors.append("graph.path: must be a file path")
            if source == "gaussian_clusters":
                for k in ("n_per_cluster", "seed"):
                    if not isinstance(g.get(k), int):
                        errors.append(f"graph.{k}: must be an integer")
                for k in ("separation", "radius"):
                    if not isinstance(g.get(k), (int, float)) or g.get(k) <= 0:
                        errors.append(f"graph.{k}: must be a positive number")
        if not isinstance(self.optimizer, dict):
            errors.append("optimizer: must be an object")
        else:
            for k, v in self.optimizer.items():
                if k not in _OPTIMIZER_FIELDS:
                    errors.append(f"optimizer.{k}: unknown field")
            try:
                if isinstance(self.optimizer, dict) and all(k in _OPTIMIZER_FIELDS for k in self.optimizer):
                    OptimizerConfig(**self.optimizer)
            except (ValueError, TypeError) as exc:
                errors.append(f"optimizer: {exc}")
        try:
            self.noise_model(19)
        except (ValueError, TypeError) as exc:
            errors.append(f"noise: {exc}")
        if errors:
            raise ConfigError(errors)

    def noise_model(self, n: int) -> NoiseModel | None:
        if self.noise is None:
            return None
        if self.noise == "table-s1":
            return table_s1_noise(n)
        if isinstance(self.noise, dict):
            allowed = {"readout_flip_prob", "depolarizing_prob_2q", "trajectories"}
            extra = set(self.noise) - allowed
            if extra:
                raise ValueError(f"unknown noise fields {sorted(extra)}")
            return NoiseModel(**self.noise)
        raise ValueError("noise must be null, 'table-s1' or an object")

    def solve_config(self, n: int) -> SolveConfig:
        return SolveConfig(
            p=self.p,
            shots=self.shots,
            budget=self.budget,
            statistic=self.statistic,
            noise=self.noise_model(n),
            optimizer=OptimizerConfig(**self.optimizer),
        )


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"<file>: invalid JSON ({exc})"]) from None
    return ExperimentConfig.from_dict(data, base_dir=path.parent)


def gaussian_clusters(n_per_cluster: int, separation: float, radius: float, seed: int):
    """Two isotropic Gaussian clouds ``separation`` apart; returns points and labels."""
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, radius, size=(n_per_cluster, 2))
    b = rng.normal(0.0, radius, size=(n_per_cluster, 2)) + [separation, 0.0]
    labels = np.repeat([0, 1], n_per_cluster)
    return np.vstack([a, b]), labels


@dataclass
class Instance:
    graph: WeightedGraph
    optimum: float
    optimal_count: int
    label: str
    ground_truth: tuple[int, ...] | None = None

    @property
    def p_success(self) -> float:
        return self.optimal_count / 2**self.graph.node_count


def make_instance(graph: WeightedGraph, label: str, ground_truth=None) -> Instance:
    _, optimum = brute_force_maxcut(graph)
    count = int(np.sum(cut_table(graph) >= optimum - OPTIMUM_TOL * max(1.0, optimum)))
    return Instance(graph, optimum, count, label, ground_truth)


def build_instances(config: ExperimentConfig) -> list[Instance]:
    g = config.graph
    source = g["source"]
    if source == "19q":
        base = topology_19q()
        return [make_instance(random_weights(base, s), f"19q-w{s}") for s in g.get("weight_seeds", [0])]
    if source == "random":
        return [
            make_instance(random_graph(g["n"], s, g.get("edge_prob", 0.5)), f"random{g['n']}-s{s}")
            for s in g.get("weight_seeds", [0])
        ]
    if source == "file":
        return [make_instance(load_graph(g["path"]), Path(g["path"]).stem)]
    pts, labels = gaussian_clusters(g["n_per_cluster"], g["separation"], g["radius"], g["seed"])
    graph = euclidean_distance_matrix(Dataset.from_points(pts))
    return [make_instance(graph, "gaussian-clusters", tuple(int(x) for x in labels))]


@dataclass
class RunResult:
    run: int
    instance: int
    result: SolveResult


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    instances: list[Instance]
    runs: list[RunResult]

    def times_to_optimum(self) -> list[float]:
        return [r.result.time_to_optimum for r in self.runs]


def _one_run(args):
    config, instance, run, inst_index = args
    solve_cfg = config.solve_config(instance.graph.node_count)
    res = solve_maxcut(
        instance.graph,
        solve_cfg,
        run_seed(config.master_seed, run),
        optimum=instance.optimum,
        keep_costs=True,
    )
    return RunResult(run, inst_index, res)


def run_experiment(config: ExperimentConfig, progress: Callable[[RunResult], None] | None = None) -> ExperimentResult:
    """Execute ``config.runs`` independent solves; run ``r`` uses instance ``r % k``."""
    config.validate()
    instances = build_instances(config)
    jobs = [(config, instances[r % len(instances)], r, r % len(instances)) for r in range(config.runs)]
    results: list[RunResult] = []
    if config.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            for res in pool.map(_one_run, jobs):
                results.append(res)
                if progress:
                    progress(res)
    else:
        for job in jobs:
            res = _one_run(job)
            results.append(res)
            if progress:
                progress(res)
    return ExperimentResult(config, instances, results)


# --- statistics -------------------------------------------------------------------


def random_sampling_cdf(p_success: float, n_shots: int, k_steps) -> float | np.ndarray:
    """``1 - (1 - p)^(k * shots)``: chance that uniform sampling has hit an
    optimum within ``k`` steps of ``shots`` draws."""
    if not 0.0 <= p_success <= 1.0:
        raise ValueError("p_success must lie in [0, 1]")
    k = np.asarray(k_steps, dtype=float)
    trials = k * n_shots
    if p_success == 1.0:
        out = np.where(trials > 0, 1.0, 0.0)
    else:
        out = -np.expm1(trials * np.log1p(-p_success))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class EcdfCurve:
    """Right-continuous empirical CDF; ``inf`` entries are censored runs."""

    samples: tuple[float, ...]

    def __init__(self, samples):
        values = tuple(sorted(float(s) for s in samples))
        if not values:
            raise ValueError("an empirical CDF needs at least one sample")
        if any(math.isnan(v) for v in values):
            raise ValueError("samples must not be NaN")
        object.__setattr__(self, "samples", values)

    @property
    def n(self) -> int:
        return len(self.samples)

    @property
    def jumps(self) -> np.ndarray:
        return np.unique([s for s in self.samples if math.isfinite(s)])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.searchsorted(np.array(self.samples), x, side="right") / self.n
        return float(out) if out.ndim == 0 else out


def empirical_cdf(samples) -> EcdfCurve:
    return EcdfCurve(samples)


def ks_statistic(f1, f2, domain=None) -> float:
    """``sup_x |F1(x) - F2(x)|``.

    For two eCDFs the sup is taken over the union of their jump points,
    where it is attained exactly. Analytic CDFs (plain callables) need an
    explicit ``domain`` of evaluation points, e.g. the integer steps.
    """
    points = []
    for f in (f1, f2):
        if isinstance(f, EcdfCurve):
            points.append(f.jumps)
        elif domain is None:
            raise ValueError("an analytic CDF needs an explicit domain")
    if domain is not None:
        points.append(np.asarray(domain, dtype=float))
    xs = np.unique(np.concatenate(points)) if points else np.array([])
    if xs.size == 0:
        return 0.0
    return float(np.max(np.abs(np.asarray(f1(xs)) - np.asarray(f2(xs)))))


def ks_significance(ks: float, n: int, m: int) -> float:
    """Smallest ``alpha`` at which ``ks`` rejects equality of the two CDFs.

    Inverts ``ks >= c(alpha) sqrt((n + m) / (n m))`` with
    ``c(alpha) = sqrt(-log(alpha / 2) / 2)``. Not clamped to 1.
    """
    if ks < 0 or n < 1 or m < 1:
        raise ValueError("need ks >= 0 and n, m >= 1")
    return 2.0 * math.exp(-2.0 * ks**2 * n * m / (n + m))


def ks_from_significance(alpha: float, n: int, m: int) -> float:
    return math.sqrt(-0.5 * math.log(alpha / 2.0)) * math.sqrt((n + m) / (n * m))


# --- analysis and output ------------------------------------------------------------


@dataclass
class Comparison:
    name: str
    ks: float
    n: int
    m: int
    alpha: float


def analyze(times: Sequence[float], p_success: float, shots: int, budget: int) -> dict:
    """eCDF of time-to-optimum against the analytic random-sampling CDF.

    Both are evaluated on the integer steps ``0..budget``; ``m`` counts the
    ``budget`` steps at which the analytic curve is defined.
    """
    steps = np.arange(budget + 1)
    null = random_sampling_cdf(p_success, shots, steps)
    out = {"steps": steps, "null": null, "ecdf": None, "comparison": None}
    if not times:
        return out
    curve = empirical_cdf(times)
    ks = ks_statistic(curve, lambda x: random_sampling_cdf(p_success, shots, x), domain=steps)
    out["ecdf"] = curve(steps)
    out["comparison"] = Comparison(
        "algorithm-vs-random-sampling", ks, curve.n, budget, ks_significance(ks, curve.n, budget)
    )
    return out


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def _write_csv(path: Path, header: Sequence[str], rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


TRACE_HEADER = ("run", "step", "gamma", "beta", "best", "mean", "historic_best", "normalized")


def _angle_field(values: Sequence[float]):
    return values[0] if len(values) == 1 else ";".join(repr(float(v)) for v in values)


def emit_outputs(results: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write traces, eCDF, null CDF, KS report, per-step costs and a summary."""
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc}") from exc
    cfg = results.config
    paths = {
        name: out / name
        for name in ("traces.csv", "ecdf.csv", "null_cdf.csv", "ks_report.json", "per_step_costs.csv", "summary.json")
    }

    trace_rows = []
    cost_rows = []
    for rr in results.runs:
        for rec in rr.result.records:
            trace_rows.append(
                (rr.run, rec.step, _angle_field(rec.gammas), _angle_field(rec.betas), rec.best_cost,
                 rec.mean_cost, rec.historic_best, rec.normalized_historic_best)
            )
        for step, (values, counts) in enumerate(rr.result.step_costs, start=1):
            cost_rows.extend((rr.run, step, v, int(c)) for v, c in zip(values, counts))
    _write_csv(paths["traces.csv"], TRACE_HEADER, trace_rows)
    _write_csv(paths["per_step_costs.csv"], ("run", "step", "cost", "count"), cost_rows)

    comparisons = []
    ecdf_rows, null_rows = [], []
    per_instance = []
    for k, inst in enumerate(results.instances):
        times = [rr.result.time_to_optimum for rr in results.runs if rr.instance == k]
        a = analyze(times, inst.p_success, cfg.shots, cfg.budget)
        null_rows.extend((k, int(s), v) for s, v in zip(a["steps"], a["null"]))
        if a["ecdf"] is not None:
            ecdf_rows.extend((k, int(s), v) for s, v in zip(a["steps"], a["ecdf"]))
        if a["comparison"] is not None:
            c = a["comparison"]
            comparisons.append(dict(asdict(c), instance=k, label=inst.label))
        per_instance.append(
            {
                "instance": k,
                "label": inst.label,
                "nodes": inst.graph.node_count,
                "edges": len(inst.graph.edges),
                "optimum": inst.optimum,
                "optimal_count": inst.optimal_count,
                "p_success": inst.p_success,
                "runs": len(times),
                "reached": sum(1 for t in times if math.isfinite(t)),
            }
        )
    _write_csv(paths["ecdf.csv"], ("instance", "step", "ecdf"), ecdf_rows)
    _write_csv(paths["null_cdf.csv"], ("instance", "step", "cdf"), null_rows)

    times = results.times_to_optimum()
    summary = {
        "name": cfg.name,
        "runs": len(results.runs),
        "reached_optimum": sum(1 for t in times if math.isfinite(t)),
        "success_fraction": (sum(1 for t in times if math.isfinite(t)) / len(times)) if times else None,
        "median_time_to_optimum": _median(times),
        "shots": cfg.shots,
        "budget": cfg.budget,
        "p": cfg.p,
        "master_seed": cfg.master_seed,
        "noise": cfg.noise,
        "statistic": cfg.statistic,
        "instances": per_instance,
    }
    _dump_json(paths["ks_report.json"], {"comparisons": comparisons})
    _dump_json(paths["summary.json"], summary)
    return list(paths.values())


def _median(times: Sequence[float]):
    if not times:
        return None
    m = float(np.median(np.array(times, dtype=float)))
    return m if math.isfinite(m) else None


def _dump_json(path: Path, data) -> None:
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, allow_nan=False)
        fh.write("\n")


def read_times_from_traces(path: str | Path) -> dict[int, float]:
    """Time-to-optimum per run recovered from a ``traces.csv`` file."""
    times: dict[int, float] = {}
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            run = int(row["run"])
            times.setdefault(run, math.inf)
            if math.isinf(times[run]) and float(row["normalized"]) >= 1 - OPTIMUM_TOL:
                times[run] = float(row["step"])
    return times
