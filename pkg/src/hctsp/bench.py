"""Batch experiments: solve, compare, analyze, gen.

Each command takes an ``ExperimentConfig`` and writes plain CSV (plus tour
files) into ``config.out``. Everything except wall-clock columns is a
deterministic function of the configuration, so re-running a configuration
reproduces the CSVs byte for byte; wall-clock values go to separate
``*timing*.csv`` files or dedicated ``*_s`` columns.
"""

from __future__ import annotations

import csv
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import landscape
from .search import (ALGORITHMS, SCHEDULES, LambdaSchedule, SearchParams, SearchResult,
                     neighbor_table, run_algorithm, three_opt_descent)
from .smoothing import original_model
from .tsp_model import (KNOWN_OPTIMA, Tour, TsplibError, bundled_names, bundled_optimal_tour,
                        format_tour, gen_random_euclidean, load_instance, read_tour,
                        write_tsplib)

CURVE_POINTS = 100
DEFAULT_LAMBDA_GRID = tuple(round(0.01 * i, 2) for i in range(11))
FALLBACK_FACTOR = 0.99


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 2)."""


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment. ``algorithms`` entries are ``ils``, ``gh``, ``ssa``,
    ``lsils`` (using ``schedule``) or ``lsils:<schedule>``."""

    instances: tuple[str, ...] = ("eil51",)
    algorithms: tuple[str, ...] = ("ils",)
    schedule: str = "setting5"
    runs: int = 1
    seed: int = 0
    budget_evals: float | None = 1e5
    budget_seconds: float | None = None
    neighbor_k: int = 20
    perturb_strength: int = 1
    lambda_grid: tuple[float, ...] = DEFAULT_LAMBDA_GRID
    anchor: str = "optimum"
    out: str = "results"
    jobs: int = 1
    opt_cost: float | None = None
    fallback_reference: bool = True
    trace: bool = False
    curve_points: int = CURVE_POINTS
    # gen
    n: int = 100
    side: float = 1_000_000.0

    def validate(self) -> "ExperimentConfig":
        if self.runs < 1:
            raise ConfigError("runs must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")
        if self.curve_points < 2:
            raise ConfigError("curve_points must be >= 2")
        if not self.instances:
            raise ConfigError("no instance given")
        for spec in self.instances:
            if not (spec.startswith("rand:") or Path(spec).is_file() or spec in bundled_names()):
                raise ConfigError(f"instance {spec!r} is neither a file, a bundled name, "
                                  "nor rand:<n>:<seed>")
        for algo in self.algorithms:
            name, _, sched = algo.partition(":")
            if name not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
            if sched and name != "lsils":
                raise ConfigError(f"only lsils takes a schedule, got {algo!r}")
            resolve_schedule(sched or self.schedule)
        for lam in self.lambda_grid:
            if not 0.0 <= lam <= 1.0:
                raise ConfigError(f"lambda {lam} outside [0, 1]")
        try:
            self.params(0)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        return self

    def params(self, seed: int, schedule: str | None = None, trace: bool | None = None
               ) -> SearchParams:
        return SearchParams(
            seed=seed, budget_evals=self.budget_evals, budget_seconds=self.budget_seconds,
            neighbor_k=self.neighbor_k, perturbation_strength=self.perturb_strength,
            lambda_schedule=resolve_schedule(schedule or self.schedule),
            trace=self.trace if trace is None else trace)

    def seeds(self) -> list[int]:
        return [self.seed + r for r in range(self.runs)]


def resolve_schedule(text: str) -> LambdaSchedule:
    try:
        return LambdaSchedule.parse(text)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"bad schedule {text!r}: {exc}; named settings are "
                          f"{', '.join(SCHEDULES)}") from exc


# --------------------------------------------------------------------------
# config files

_LIST_KEYS = {"instances", "algorithms", "lambda_grid"}


def read_config_file(path) -> dict:
    """Parse ``key = value`` lines (``#`` starts a comment)."""
    out = {}
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected 'key = value'")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def _convert(name: str, value):
    """Coerce a string (from a file) to the field's type."""
    if not isinstance(value, str):
        return value
    if name in _LIST_KEYS:
        items = [v.strip() for v in value.split(",") if v.strip()]
        return tuple(float(v) for v in items) if name == "lambda_grid" else tuple(items)
    if name in ("runs", "seed", "neighbor_k", "perturb_strength", "jobs", "curve_points", "n"):
        return int(value)
    if name in ("budget_evals", "budget_seconds", "opt_cost", "side"):
        return None if value.lower() in ("", "none") else float(value)
    if name in ("fallback_reference", "trace"):
        return value.lower() in ("1", "true", "yes", "on")
    return value


_ALIASES = {"instance": "instances", "algo": "algorithms", "perturbation_strength":
            "perturb_strength"}


def make_config(*layers: dict) -> ExperimentConfig:
    """Merge dicts left to right (later wins, ``None`` values skipped)."""
    names = {f.name for f in fields(ExperimentConfig)}
    merged = {}
    for layer in layers:
        for key, value in layer.items():
            key = _ALIASES.get(key, key)
            if value is None:
                continue
            if key not in names:
                raise ConfigError(f"unknown config key {key!r}")
            try:
                merged[key] = _convert(key, value)
            except ValueError as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
    return ExperimentConfig(**merged).validate()


# --------------------------------------------------------------------------
# job execution

@lru_cache(maxsize=16)
def _instance(spec: str):
    return load_instance(spec)


def _job(spec: str, algo: str, params: SearchParams) -> SearchResult:
    name, _, _ = algo.partition(":")
    return run_algorithm(name, _instance(spec), params)


def run_jobs(jobs: list[tuple[str, str, SearchParams]], workers: int) -> list[SearchResult]:
    """Run (instance spec, algorithm, params) jobs; results in job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [_job(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_job, *j) for j in jobs]
        return [f.result() for f in futures]


def _algo_schedule(cfg: ExperimentConfig, algo: str) -> str | None:
    name, _, sched = algo.partition(":")
    if name != "lsils":
        return None
    return sched or cfg.schedule


def algo_label(cfg: ExperimentConfig, algo: str) -> str:
    sched = _algo_schedule(cfg, algo)
    return f"lsils({resolve_schedule(sched).name})" if sched else algo


def _num(x: float) -> str:
    """Shortest round-tripping text for a float (integers without '.0')."""
    x = float(x)
    if x.is_integer() and abs(x) < 2**53:
        return str(int(x))
    return repr(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _outdir(cfg: ExperimentConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# solve

RESULT_COLUMNS = ("instance", "algorithm", "seed", "n", "best_cost", "evaluations",
                  "iterations", "moves", "perturbations", "status")
TRACE_COLUMNS = ("event", "fo", "model", "moves", "dist_prev", "dist_ref", "evaluations",
                 "perturbed", "time_s")


def cmd_solve(cfg: ExperimentConfig) -> list[SearchResult]:
    """Run every (instance, algorithm, seed) and write tours, results, traces."""
    out = _outdir(cfg)
    jobs = [(spec, algo, cfg.params(seed, _algo_schedule(cfg, algo)))
            for spec in cfg.instances for algo in cfg.algorithms for seed in cfg.seeds()]
    results = run_jobs(jobs, cfg.jobs)
    rows, timing = [], []
    for (spec, algo, _), res in zip(jobs, results):
        inst = _instance(spec)
        label = algo_label(cfg, algo)
        stem = f"{inst.name}_{label}_s{res.seed}".replace("(", "-").replace(")", "")
        (out / f"{stem}.tour").write_text(format_tour(inst.name, res.best_tour))
        rows.append((inst.name, label, res.seed, inst.n, _num(res.best_cost),
                     _num(res.evaluations_used), res.iterations, res.moves,
                     res.perturbations, res.status))
        timing.append((inst.name, label, res.seed, f"{res.elapsed:.6f}"))
        if res.trace is not None:
            tr = res.trace
            _write_csv(out / f"{stem}_trace.csv", TRACE_COLUMNS, (
                (i, _num(tr.fo[i]), _num(tr.model[i]), int(tr.moves[i]), int(tr.dist_prev[i]),
                 int(tr.dist_ref[i]), _num(tr.lookups[i] / tr.n), int(tr.perturbed[i]),
                 f"{tr.times[i]:.6f}") for i in range(len(tr))))
    _write_csv(out / "results.csv", RESULT_COLUMNS, rows)
    _write_csv(out / "timing.csv", ("instance", "algorithm", "seed", "elapsed_s"), timing)
    return results


# --------------------------------------------------------------------------
# compare

@dataclass(frozen=True)
class CurvePoint:
    abscissa: float
    mean_excess: float
    stderr: float


def curve_grid(cfg: ExperimentConfig) -> tuple[str, np.ndarray]:
    """Evenly spaced checkpoints (1/points .. 1) x budget, in evals or seconds."""
    if cfg.budget_evals is not None:
        unit, total = "evaluations", cfg.budget_evals
    else:
        unit, total = "seconds", cfg.budget_seconds
    k = cfg.curve_points
    return unit, total * np.arange(1, k + 1) / k


def _history_x(res: SearchResult, unit: str) -> np.ndarray:
    return res.history_evaluations if unit == "evaluations" else res.history_times


def reference_cost(cfg: ExperimentConfig, inst, results) -> tuple[float, str]:
    """Optimal cost for excess: explicit, archived, or best found x 0.99."""
    if cfg.opt_cost is not None:
        return float(cfg.opt_cost), "given"
    if inst.name in KNOWN_OPTIMA:
        return float(KNOWN_OPTIMA[inst.name]), "known"
    if not cfg.fallback_reference:
        raise ConfigError(f"no reference cost for {inst.name}; pass --opt-cost or enable "
                          "the best-found fallback")
    return FALLBACK_FACTOR * min(r.best_cost for r in results), "best_found_x0.99"


def excess_curves(cfg, results, opt: float) -> tuple[str, np.ndarray, np.ndarray]:
    """Per-run best-so-far excess sampled on the grid, shape (runs, points)."""
    unit, grid = curve_grid(cfg)
    per_run = np.vstack([landscape.excess(
        landscape.best_so_far(grid, _history_x(r, unit), r.history_costs), opt)
        for r in results])
    return unit, grid, per_run


def cmd_compare(cfg: ExperimentConfig) -> dict:
    """Mean excess curves and AUC per algorithm on each instance."""
    out = _outdir(cfg)
    jobs = [(spec, algo, cfg.params(seed, _algo_schedule(cfg, algo), trace=False))
            for spec in cfg.instances for algo in cfg.algorithms for seed in cfg.seeds()]
    results = run_jobs(jobs, cfg.jobs)
    curve_rows, auc_rows, run_rows, timing = [], [], [], []
    summary = {}
    per = len(cfg.seeds())
    k = 0
    for spec in cfg.instances:
        inst = _instance(spec)
        block = results[k:k + per * len(cfg.algorithms)]
        opt, source = reference_cost(cfg, inst, block)
        for a, algo in enumerate(cfg.algorithms):
            label = algo_label(cfg, algo)
            runs = block[a * per:(a + 1) * per]
            unit, grid, per_run = excess_curves(cfg, runs, opt)
            mean = per_run.mean(axis=0)
            err = (per_run.std(axis=0, ddof=1) / math.sqrt(per) if per > 1
                   else np.zeros_like(mean))
            for x, m, e in zip(grid, mean, err):
                curve_rows.append((inst.name, label, unit, _num(x), repr(float(m)),
                                   repr(float(e))))
            area = landscape.auc(grid, mean)
            run_aucs = [landscape.auc(grid, row) for row in per_run]
            auc_rows.append((inst.name, label, per, unit, _num(opt), source, repr(area),
                             repr(float(mean[-1]))))
            for r, ra in zip(runs, run_aucs):
                run_rows.append((inst.name, label, r.seed, _num(r.best_cost), repr(ra)))
                timing.append((inst.name, label, r.seed, f"{r.elapsed:.6f}"))
            summary[(inst.name, label)] = {"auc": area, "run_aucs": run_aucs,
                                           "best": [r.best_cost for r in runs],
                                           "curve": [CurvePoint(float(x), float(m), float(e))
                                                     for x, m, e in zip(grid, mean, err)]}
        k += per * len(cfg.algorithms)
    _write_csv(out / "curves.csv", ("instance", "algorithm", "unit", "abscissa",
                                    "mean_excess", "stderr"), curve_rows)
    _write_csv(out / "auc.csv", ("instance", "algorithm", "runs", "unit", "opt_cost",
                                 "opt_source", "auc", "final_mean_excess"), auc_rows)
    _write_csv(out / "runs.csv", ("instance", "algorithm", "seed", "best_cost", "auc"),
               run_rows)
    _write_csv(out / "timing.csv", ("instance", "algorithm", "seed", "elapsed_s"), timing)
    return summary


# --------------------------------------------------------------------------
# analyze

def resolve_anchors(cfg: ExperimentConfig, inst) -> list[tuple[Tour, str]]:
    """Anchors from ``cfg.anchor``: comma-separated items, each ``optimum``,
    ``local`` / ``local:<k>`` (fresh 3-Opt local optima) or a tour file."""
    anchors = []
    for item in (s.strip() for s in cfg.anchor.split(",") if s.strip()):
        if item == "optimum":
            try:
                anchors.append((bundled_optimal_tour(inst.name, inst), "global"))
            except FileNotFoundError as exc:
                raise ConfigError(f"no archived optimum for {inst.name}; give a tour file "
                                  "or use 'local'") from exc
        elif item == "local" or item.startswith("local:"):
            count = int(item.split(":", 1)[1]) if ":" in item else 1
            nbrs = neighbor_table(inst, cfg.neighbor_k)
            rng = np.random.default_rng(cfg.seed)
            for _ in range(count):
                tour, _ = three_opt_descent(original_model(inst), rng.permutation(inst.n), nbrs)
                anchors.append((tour, _anchor_kind(inst, tour)))
        else:
            path = Path(item)
            if not path.is_file():
                raise ConfigError(f"anchor {item!r} is not optimum, local[:k] or a tour file")
            try:
                tour = read_tour(path, inst)
            except (ValueError, TsplibError) as exc:
                raise ConfigError(f"anchor file {item} does not fit {inst.name}: {exc}") from exc
            anchors.append((tour, _anchor_kind(inst, tour)))
    if not anchors:
        raise ConfigError("no anchor given")
    return anchors


def _anchor_kind(inst, tour: Tour) -> str:
    opt = KNOWN_OPTIMA.get(inst.name)
    return "global" if opt is not None and tour.cost <= opt else "local"


LANDSCAPE_COLUMNS = landscape.CSV_COLUMNS + ("anchor_cost", "fdc_reference_proven")


def cmd_analyze(cfg: ExperimentConfig) -> list:
    """Landscape metrics for every anchor x lambda; one CSV row each."""
    out = _outdir(cfg)
    rows, all_reports = [], []
    params = cfg.params(cfg.seed, trace=True)
    for spec in cfg.instances:
        inst = _instance(spec)
        for anchor, kind in resolve_anchors(cfg, inst):
            reports = landscape.analyze_transform(inst, anchor, cfg.lambda_grid, cfg.runs,
                                                  params, anchor_kind=kind)
            for rep in reports:
                row = rep.row()
                rows.append([row[c] for c in landscape.CSV_COLUMNS]
                            + [_num(anchor.cost), int(rep.reference_proven)])
                all_reports.append((anchor.cost, rep))
    _write_csv(out / "landscape.csv", LANDSCAPE_COLUMNS, rows)
    summary = []
    for lam in cfg.lambda_grid:
        sel = [r for _, r in all_reports if r.lam == float(lam)]
        summary.append((f"{float(lam):g}", len(sel),
                        f"{np.mean([r.lo_density for r in sel]):.6f}",
                        f"{np.nanmean([r.escaping_rate for r in sel]):.6f}",
                        f"{np.nanmean([r.fdc for r in sel]):.6f}",
                        f"{np.mean([r.mean_runtime for r in sel]):.6f}"))
    _write_csv(out / "landscape_summary.csv", ("lambda", "anchors", "lo_density",
                                               "escaping_rate", "fdc", "mean_runtime_s"),
               summary)
    return all_reports


# --------------------------------------------------------------------------
# gen

def cmd_gen(n: int, seed: int, side: float, out: str) -> Path:
    """Write a uniform random EUC_2D instance as a TSPLIB file."""
    if n < 3:
        raise ConfigError("n must be >= 3")
    inst = gen_random_euclidean(n, seed, side)
    path = Path(out)
    if path.is_dir() or out.endswith(os.sep):
        path = path / f"{inst.name}.tsp"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        write_tsplib(inst, fh)
    return path
