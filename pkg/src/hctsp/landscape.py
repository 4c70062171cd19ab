"""Landscape metrics from instrumented ILS runs, plus excess and AUC.

The four metrics describe a (transformed) landscape through the local optima
an ILS process visits: how many it meets per 100 moves (density), how often
a kick leads to a different optimum (escaping rate), how well model cost
tracks distance to the optimum (FDC), and how long it takes to reach the
optimum (runtime).
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import stats

from .search import SearchParams, ils_on_model
from .smoothing import CostModel, construct_convex_hull_tsp
from .trace import SearchTrace
from .tsp_model import Tour, TspInstance, edge_keys

CSV_COLUMNS = ("instance", "lambda", "anchor_kind", "runs", "lo_density", "escaping_rate",
               "fdc", "mean_runtime_s", "censored")

__all__ = [
    "SearchTrace", "LandscapeReport", "DegenerateInputError", "local_optimum_density",
    "escaping_rate", "fdc", "fdc_pairs", "excess", "auc", "analyze_transform",
    "reports_to_csv", "rank_test_less", "best_so_far", "mean_excess_curve",
]


class DegenerateInputError(ValueError):
    """Input for which a statistic is undefined (e.g. zero variance)."""


# --------------------------------------------------------------------------
# per-trace metrics

def _tour_key(order: np.ndarray) -> bytes:
    return edge_keys(order).tobytes()


def local_optimum_density(trace: SearchTrace, dedup: bool = False) -> float:
    """Local optima per 100 moves; a move is a descent step or a kick.

    With ``dedup`` repeated visits of the same optimum count once (needs a
    trace that kept its tours).
    """
    moves = trace.move_count
    if moves <= 0:
        raise ValueError("trace has no moves")
    if dedup:
        if trace.tours is None:
            raise ValueError("deduplicated density needs a trace with tours")
        count = len({_tour_key(t) for t in trace.tours})
    else:
        count = len(trace)
    return 100.0 * count / moves


def escaping_rate(trace: SearchTrace, drop_last: bool = False) -> float:
    """Fraction of kick+descent episodes ending at a different optimum.

    ``drop_last`` leaves out the final event, for runs that stopped because
    it reached the target (its outcome is then forced by the stopping rule).
    """
    mask = np.asarray(trace.perturbed, dtype=bool)
    if drop_last and mask.size:
        mask = mask.copy()
        mask[-1] = False
    if not mask.any():
        raise ValueError("trace has no perturbation episodes")
    return float(np.count_nonzero(np.asarray(trace.dist_prev)[mask] > 0) / mask.sum())


def fdc(fitness, distance) -> float:
    """Pearson correlation between fitness values and distances."""
    f = np.asarray(fitness, dtype=np.float64)
    d = np.asarray(distance, dtype=np.float64)
    if f.shape != d.shape or f.ndim != 1:
        raise ValueError("fitness and distance must be 1-d arrays of equal length")
    if f.size < 2:
        raise DegenerateInputError("need at least two samples")
    fc = f - f.mean()
    dc = d - d.mean()
    sf = math.sqrt(float(fc @ fc))
    sd = math.sqrt(float(dc @ dc))
    if sf == 0.0 or sd == 0.0:
        raise DegenerateInputError("zero variance in fitness or distance")
    r = float(fc @ dc) / (sf * sd)
    return min(1.0, max(-1.0, r))


def fdc_pairs(samples) -> float:
    """``fdc`` over a sequence of (fitness, distance) pairs."""
    arr = np.asarray(list(samples), dtype=np.float64).reshape(-1, 2)
    return fdc(arr[:, 0], arr[:, 1])


def excess(cost: float, opt_cost: float) -> float:
    """Percentage gap of ``cost`` above ``opt_cost``."""
    if not opt_cost > 0:
        raise ValueError("opt_cost must be positive")
    return (cost - opt_cost) / opt_cost * 100.0


def auc(x, y) -> float:
    """Trapezoidal area under the curve y(x)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or x.shape != y.shape:
        raise ValueError("x and y must be 1-d arrays of equal length")
    if x.size < 2:
        raise ValueError("need at least two points")
    if not np.all(np.diff(x) > 0):
        raise ValueError("abscissas must be strictly increasing")
    return float(np.trapezoid(y, x))


def rank_test_less(a, b) -> float:
    """One-sided Mann-Whitney p-value for 'a tends to be smaller than b'.

    NaN entries (runs where the statistic is undefined) are dropped.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    a = a[~np.isnan(a)]
    b = b[~np.isnan(b)]
    return float(stats.mannwhitneyu(a, b, alternative="less").pvalue)


# --------------------------------------------------------------------------
# anytime curves

def best_so_far(at_x, history_x, history_cost) -> np.ndarray:
    """Best cost known at each abscissa in ``at_x`` (step function)."""
    hx = np.asarray(history_x, dtype=np.float64)
    idx = np.searchsorted(hx, np.asarray(at_x, dtype=np.float64), side="right") - 1
    hc = np.asarray(history_cost, dtype=np.float64)
    return hc[np.clip(idx, 0, None)]


def mean_excess_curve(at_x, histories, opt_cost: float) -> np.ndarray:
    """Mean over runs of the best-so-far excess, sampled at ``at_x``."""
    curves = [excess(best_so_far(at_x, hx, hc), opt_cost) for hx, hc in histories]
    return np.mean(np.vstack(curves), axis=0)


# --------------------------------------------------------------------------
# sweeps

@dataclass(frozen=True, eq=False)
class LandscapeReport:
    """Aggregated metrics for one (instance, lambda).

    ``lo_density`` pools all runs (total optima over total moves);
    ``escaping_rate`` pools all episodes; ``mean_runtime`` is the censored
    mean: runs that never reached the target contribute their full running
    time and are counted in ``censored``. Per-run values are kept for rank
    tests; ``run_escaping_free`` leaves out the last episode of runs that
    stopped on reaching the target (NaN where no other episode exists). ``reference_proven`` is False when FDC distances are measured to
    the best tour found by the sweep rather than to a known optimum.
    """

    instance: str
    lam: float
    anchor_kind: str
    runs: int
    lo_density: float
    escaping_rate: float
    fdc: float
    mean_runtime: float
    censored: int
    sample_size: int
    reference_proven: bool
    run_density: np.ndarray
    run_escaping: np.ndarray
    run_runtime: np.ndarray
    run_escaping_free: np.ndarray | None = None

    def __post_init__(self):
        if self.sample_size <= 0:
            raise ValueError("empty report")
        if not self.lo_density >= 0:
            raise ValueError("density must be non-negative")
        if not (math.isnan(self.escaping_rate) or 0.0 <= self.escaping_rate <= 1.0):
            raise ValueError("escaping rate outside [0, 1]")
        if not (math.isnan(self.fdc) or -1.0 <= self.fdc <= 1.0):
            raise ValueError("fdc outside [-1, 1]")

    def row(self) -> dict:
        return {"instance": self.instance, "lambda": f"{self.lam:g}",
                "anchor_kind": self.anchor_kind, "runs": self.runs,
                "lo_density": f"{self.lo_density:.6f}",
                "escaping_rate": f"{self.escaping_rate:.6f}",
                "fdc": f"{self.fdc:.6f}", "mean_runtime_s": f"{self.mean_runtime:.6f}",
                "censored": self.censored}


def reports_to_csv(reports, fh=None) -> str:
    out = io.StringIO() if fh is None else fh
    writer = csv.DictWriter(out, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in reports:
        writer.writerow(r.row())
    return out.getvalue() if fh is None else ""


def _bond_distance_to_set(tours: np.ndarray, refs: list[np.ndarray]) -> np.ndarray:
    """Distance of each row of ``tours`` to the nearest reference tour."""
    n = tours.shape[1]
    best = np.full(tours.shape[0], n, dtype=np.int64)
    for ref in refs:
        pos = np.empty(n, dtype=np.int64)
        pos[ref] = np.arange(n)
        a = pos[tours]
        b = np.roll(a, -1, axis=1)
        gap = np.abs(a - b)
        common = np.count_nonzero((gap == 1) | (gap == n - 1), axis=1)
        best = np.minimum(best, n - common)
    return best


def analyze_transform(inst: TspInstance, anchor, lambdas, runs: int, params: SearchParams, *,
                      anchor_kind: str = "global", fdc_samples: int = 1000,
                      dedup: bool = False) -> list[LandscapeReport]:
    """Sample the landscape of g for each lambda with ``runs`` ILS runs.

    Run r uses seed ``params.seed + r`` and stops as soon as it reaches the
    anchor's g value, or when the budget in ``params`` runs out. For a
    global anchor FDC distances are to the anchor; for a local anchor they
    are to the best g-tour any run of that lambda found (flagged as not
    proven). ``fdc_samples`` local optima are drawn uniformly from the
    optima of all runs, adding runs with fresh seeds while fewer are available.
    """
    if anchor_kind not in ("global", "local"):
        raise ValueError("anchor_kind must be 'global' or 'local'")
    if runs < 1:
        raise ValueError("runs must be >= 1")
    anchor = anchor if isinstance(anchor, Tour) else Tour.from_order(inst, anchor)
    hull = construct_convex_hull_tsp(inst, anchor)
    reports = []
    for lam in lambdas:
        lam = float(lam)
        if not 0.0 <= lam <= 1.0:
            raise ValueError(f"lambda {lam} outside [0, 1]")
        model = CostModel("hc", inst, lam, hull=hull)
        target = model.tour_value(anchor)
        keep = anchor_kind == "local"
        traces: list[SearchTrace] = []
        reached: list[bool] = []
        runtimes = np.empty(runs)
        censored = 0
        for r in range(runs):
            p = replace(params, seed=params.seed + r, trace=True)
            res = ils_on_model(model, p, reference=anchor, target_model=target, keep_tours=keep)
            traces.append(res.trace)
            reached.append(res.status == "target")
            runtimes[r] = res.elapsed
            if res.status != "target":
                censored += 1
        run_density = np.array([local_optimum_density(t, dedup) for t in traces])
        run_escaping = np.array([escaping_rate(t) if t.episodes else np.nan for t in traces])
        run_free = np.array([
            escaping_rate(t, drop_last=hit) if t.episodes > int(hit and t.perturbed[-1])
            else np.nan for t, hit in zip(traces, reached)])
        total_lo = sum(len(t) for t in traces)
        total_moves = sum(t.move_count for t in traces)
        episodes = sum(t.episodes for t in traces)
        escaped = sum(int(np.count_nonzero(t.dist_prev[t.perturbed] > 0)) for t in traces)
        if dedup:
            density = float(np.mean(run_density))
        else:
            density = 100.0 * total_lo / total_moves
        esc = escaped / episodes if episodes else float("nan")

        # runs stop at the optimum, so smooth landscapes yield few optima;
        # extra runs (not used for the other metrics) top up the FDC sample
        fdc_traces = list(traces)
        extra = 0
        while sum(len(t) for t in fdc_traces) < fdc_samples and extra < 100 * runs:
            p = replace(params, seed=params.seed + runs + extra, trace=True)
            res = ils_on_model(model, p, reference=anchor, target_model=target, keep_tours=keep)
            fdc_traces.append(res.trace)
            extra += 1
        fit = np.concatenate([t.model for t in fdc_traces])
        if anchor_kind == "global":
            dist = np.concatenate([t.dist_ref for t in fdc_traces])
        else:
            tours = np.concatenate([t.tours for t in fdc_traces])
            ref = tours[int(np.argmin(fit))]
            dist = _bond_distance_to_set(tours, [ref])
        rng = np.random.default_rng(params.seed)
        take = min(fdc_samples, fit.size)
        pick = np.sort(rng.choice(fit.size, size=take, replace=False))
        try:
            f = fdc(fit[pick], dist[pick])
        except DegenerateInputError:
            f = float("nan")
        reports.append(LandscapeReport(
            instance=inst.name, lam=lam, anchor_kind=anchor_kind, runs=runs,
            lo_density=density, escaping_rate=esc, fdc=f,
            mean_runtime=float(runtimes.mean()), censored=censored, sample_size=int(take),
            reference_proven=anchor_kind == "global", run_density=run_density,
            run_escaping=run_escaping, run_runtime=runtimes, run_escaping_free=run_free))
    return reports
