"""Iterated local search on the original and on transformed landscapes.

``ils`` is plain iterated 3-Opt with double-bridge kicks and random-walk
acceptance. ``lsils`` descends on the homotopic blend g = (1 - lam) f_o +
lam f_c, where f_c is the convex-hull TSP anchored at the best tour found so
far under f_o, with lam following a schedule over the budget. GH and SSA
(``smoothing_schedule_search``) descend through a few rounds of power-smoothed
costs before switching to plain ILS.

Budgets are counted in evaluations: one evaluation is n edge-cost lookups,
i.e. the cost of evaluating one full tour, and a move delta costs (edges
examined) / n evaluations. Lookups made only to keep the original-cost
best-so-far up to date are not charged.
"""

from __future__ import annotations

import math
import time
import weakref
from dataclasses import dataclass, field

import numpy as np

from . import _costs
from . import _kernels as K
from .smoothing import CostModel, construct_convex_hull_tsp, original_model
from .trace import SearchTrace
from .tsp_model import DENSE_LIMIT, NeighborTable, Tour, TspInstance, nearest_neighbor_lists

REFRESH_MODES = ("auto", "iteration", "breakpoint")
AUTO_REFRESH_LIMIT = 2000
GH_ALPHAS = (6, 5, 4, 3, 2, 1)
# (alpha, concave) per round: convex and concave steps alternate
SSA_ROUNDS = ((7, False), (7, True), (5, False), (5, True), (3, False), (3, True), (1, False))

_STATUS_NAMES = {
    K.STATUS_BUDGET: "budget",
    K.STATUS_ITERS: "iterations",
    K.STATUS_TARGET: "target",
    K.STATUS_TIME: "time",
}


# --------------------------------------------------------------------------
# parameters

@dataclass(frozen=True)
class LambdaSchedule:
    """Piecewise-constant lambda over the budget.

    ``breakpoints`` are (budget fraction, lambda) pairs; fractions strictly
    increase from 0 and each lambda holds until the next fraction.
    """

    breakpoints: tuple[tuple[float, float], ...]
    name: str = "custom"

    def __post_init__(self):
        bps = tuple((float(f), float(v)) for f, v in self.breakpoints)
        if not bps:
            raise ValueError("schedule needs at least one breakpoint")
        if bps[0][0] != 0.0:
            raise ValueError("first breakpoint must be at fraction 0")
        for (f0, _), (f1, _) in zip(bps, bps[1:]):
            if not f1 > f0:
                raise ValueError("breakpoint fractions must strictly increase")
        for f, v in bps:
            if not 0.0 <= f < 1.0:
                raise ValueError(f"breakpoint fraction {f} outside [0, 1)")
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"lambda {v} outside [0, 1]")
        object.__setattr__(self, "breakpoints", bps)

    @classmethod
    def constant(cls, lam: float) -> "LambdaSchedule":
        return cls(((0.0, lam),), name=f"constant:{lam:g}")

    @classmethod
    def tenths(cls, values, name: str = "custom") -> "LambdaSchedule":
        """One lambda per tenth of the budget."""
        values = list(values)
        if len(values) != 10:
            raise ValueError("need exactly ten values")
        return cls(tuple((i / 10, v) for i, v in enumerate(values)), name=name)

    @classmethod
    def parse(cls, text: str) -> "LambdaSchedule":
        """A setting name, ``constant:<lam>``, a bare number, or ``frac:lam,...``."""
        text = text.strip()
        key = text.lower()
        if key in SCHEDULES:
            return SCHEDULES[key]
        if key.startswith("constant:"):
            return cls.constant(float(key.split(":", 1)[1]))
        if ":" not in key:
            return cls.constant(float(key))
        pairs = []
        for item in key.split(","):
            frac, lam = item.split(":")
            pairs.append((float(frac), float(lam)))
        return cls(tuple(pairs), name=text)

    def value_at(self, frac: float) -> float:
        lam = self.breakpoints[0][1]
        for f, v in self.breakpoints:
            if frac >= f:
                lam = v
        return lam

    def segments(self) -> list[tuple[float, float, float]]:
        """(start, end, lambda) runs, merging neighbours with equal lambda."""
        out: list[list[float]] = []
        for f, v in self.breakpoints:
            if out and out[-1][2] == v:
                continue
            if out:
                out[-1][1] = f
            out.append([f, 1.0, v])
        return [tuple(s) for s in out]

    @property
    def all_zero(self) -> bool:
        return all(v == 0.0 for _, v in self.breakpoints)


SCHEDULES = {
    "setting1": LambdaSchedule.tenths([0.02] * 10, "setting1"),
    "setting2": LambdaSchedule.tenths([0.04] * 10, "setting2"),
    "setting3": LambdaSchedule.tenths([0.06] * 10, "setting3"),
    "setting4": LambdaSchedule.tenths(
        [0.0, 0.0, 0.01, 0.01, 0.02, 0.02, 0.03, 0.03, 0.04, 0.04], "setting4"),
    "setting5": LambdaSchedule.tenths([i / 100 for i in range(10)], "setting5"),
}


@dataclass(frozen=True)
class SearchParams:
    """Run configuration.

    At least one of ``budget_evals`` (full-tour-equivalent evaluations) and
    ``budget_seconds`` must be set; the run stops at whichever comes first.
    ``refresh`` picks when LSILS rebuilds its hull TSP: every iteration in
    which the best tour improved, only at schedule breakpoints, or
    ``auto`` (per iteration up to 2000 cities).
    """

    seed: int = 0
    budget_evals: float | None = 1e6
    budget_seconds: float | None = None
    neighbor_k: int = 20
    perturbation_strength: int = 1
    lambda_schedule: LambdaSchedule = field(default_factory=lambda: LambdaSchedule.constant(0.0))
    trace: bool = False
    keep_tours: bool = False
    refresh: str = "auto"
    target_cost: float | None = None

    def __post_init__(self):
        if self.budget_evals is None and self.budget_seconds is None:
            raise ValueError("need an evaluation or a time budget")
        if self.budget_evals is not None and not self.budget_evals > 0:
            raise ValueError("budget_evals must be positive")
        if self.budget_seconds is not None and not self.budget_seconds > 0:
            raise ValueError("budget_seconds must be positive")
        if self.neighbor_k < 1:
            raise ValueError("neighbor_k must be >= 1")
        if self.perturbation_strength < 1:
            raise ValueError("perturbation_strength must be >= 1")
        if self.refresh not in REFRESH_MODES:
            raise ValueError(f"refresh must be one of {REFRESH_MODES}")
        if not isinstance(self.lambda_schedule, LambdaSchedule):
            raise TypeError("lambda_schedule must be a LambdaSchedule")


@dataclass(eq=False)
class SearchResult:
    """Outcome of one run. ``best_cost`` is always an original-cost value.

    ``history`` holds the best-so-far trajectory: lookup counts at which the
    best improved, the seconds elapsed at the end of that iteration, and the
    new best costs. Its first entry is the random start.
    """

    algorithm: str
    seed: int
    best_tour: Tour
    best_cost: float
    lookups: int
    n: int
    elapsed: float
    iterations: int
    moves: int
    perturbations: int
    status: str
    history_lookups: np.ndarray
    history_times: np.ndarray
    history_costs: np.ndarray
    trace: SearchTrace | None = None
    phases: tuple = ()

    @property
    def evaluations_used(self) -> float:
        return self.lookups / self.n

    @property
    def history_evaluations(self) -> np.ndarray:
        return self.history_lookups / self.n


@dataclass
class BestTracker:
    """Best tour seen under the original costs."""

    order: np.ndarray | None = None
    cost: float = math.inf
    updates: int = 0


# --------------------------------------------------------------------------
# engine

_neighbor_cache: "weakref.WeakKeyDictionary[TspInstance, dict]" = weakref.WeakKeyDictionary()


def neighbor_table(inst: TspInstance, k: int) -> NeighborTable:
    """Cached candidate lists, k clipped to n - 1."""
    k = min(k, inst.n - 1)
    per = _neighbor_cache.setdefault(inst, {})
    if k not in per:
        per[k] = nearest_neighbor_lists(inst, k)
    return per[k]


def _check_searchable(inst: TspInstance):
    if inst.n < 8:
        raise ValueError(f"search needs at least 8 cities, got {inst.n}")
    if inst.dense.shape[0] == 0:
        raise ValueError(f"search keeps dense cost tables; n must be <= {DENSE_LIMIT}")


def _model_table(model: CostModel, args) -> np.ndarray:
    base = model.base.dense
    if model.kind == "original":
        return np.array(base)
    G = np.empty(base.shape)
    K.fill_model(G, args)
    return G


class _Engine:
    """Search state plus the growable buffers the kernel writes into."""

    def __init__(self, inst: TspInstance, params: SearchParams, *, reference=None,
                 start=None, trace=None, keep_tours=None):
        _check_searchable(inst)
        n = inst.n
        self.inst = inst
        self.params = params
        self.rng = np.random.default_rng(params.seed)
        self.nbr = neighbor_table(inst, params.neighbor_k).lists
        self.D = inst.dense
        self.G = np.empty((n, n))
        self.NC = np.empty(self.nbr.shape)
        if start is None:
            order = self.rng.permutation(n).astype(np.int64)
        else:
            order = np.array(start.order if isinstance(start, Tour) else start, dtype=np.int64)
        self.tour = order
        self.pos = np.empty(n, dtype=np.int64)
        self.pos[order] = np.arange(n)
        self.best = order.copy()
        fo = float(_costs.order_cost(order, *original_model(inst).kernel_args()))
        self.fstate = np.array([fo, fo, fo])
        self.istate = np.zeros(K.N_ISTATE, dtype=np.int64)
        self.hist_lookups = np.zeros(256, dtype=np.int64)
        self.hist_costs = np.zeros(256)
        self.hist_times = np.zeros(256)
        self.hist_costs[0] = fo
        self.istate[K.HIST_LEN] = 1
        self.trace_on = params.trace if trace is None else trace
        self.keep_tours = params.keep_tours if keep_tours is None else keep_tours
        self.trace = self._trace_buffers(256 if self.trace_on else 0)
        ref_pos = np.zeros(0, dtype=np.int64)
        if reference is not None:
            ref = reference.order if isinstance(reference, Tour) else np.asarray(reference)
            ref_pos = np.empty(n, dtype=np.int64)
            ref_pos[ref] = np.arange(n)
        self.work = (np.zeros(n, dtype=np.int64), np.zeros(n, dtype=np.int64), ref_pos)
        self.queue = np.zeros(n, dtype=np.int64)
        self.inq = np.zeros(n, dtype=np.bool_)
        self.qs = np.zeros(2, dtype=np.int64)
        self.buf = np.zeros(n, dtype=np.int64)
        self.M = None
        self.phases: list[tuple[int, str]] = []
        self.status = K.STATUS_BUDGET
        self.t0 = time.perf_counter()
        self.stop_lookups = (np.iinfo(np.int64).max if params.budget_evals is None
                             else int(math.ceil(params.budget_evals * n)))
        self.deadline = (math.inf if params.budget_seconds is None
                         else self.t0 + params.budget_seconds)

    def _trace_buffers(self, cap: int):
        n = self.inst.n
        tours = np.zeros((cap, n) if self.keep_tours else (0, 0), dtype=np.int64)
        return (np.zeros(cap), np.zeros(cap), np.zeros(cap, dtype=np.int64),
                np.zeros(cap, dtype=np.int64), np.zeros(cap, dtype=np.int64),
                np.zeros(cap, dtype=np.int64), np.zeros(cap), np.zeros(cap, dtype=np.bool_),
                tours)

    def _ensure_capacity(self):
        h = self.istate[K.HIST_LEN]
        cap = self.hist_lookups.shape[0]
        if cap - h < 2:
            self.hist_lookups = np.concatenate([self.hist_lookups, np.zeros(cap, np.int64)])
            self.hist_costs = np.concatenate([self.hist_costs, np.zeros(cap)])
            self.hist_times = np.concatenate([self.hist_times, np.zeros(cap)])
        if self.trace_on:
            t = self.istate[K.TRACE_LEN]
            cap = self.trace[0].shape[0]
            if cap - t < 2:
                bigger = self._trace_buffers(2 * cap)
                for old, new in zip(self.trace, bigger):
                    if old.shape[0]:
                        new[:cap] = old
                self.trace = bigger

    # -- control

    def set_model(self, model: CostModel, label: str):
        self.model = model
        self.M = model.kernel_args()
        self.G = _model_table(model, self.M)
        K.fill_neighbor_costs(self.NC, self.G, self.nbr)
        self.fstate[K.CUR_MODEL] = _costs.order_cost(self.tour, *self.M)
        self.phases.append((int(self.istate[K.TRACE_LEN]), label))

    def exhausted(self) -> bool:
        return (self.istate[K.LOOKUPS] >= self.stop_lookups
                or time.perf_counter() >= self.deadline
                or self.status == K.STATUS_TARGET)

    def advance(self, stop_lookups: int, *, init_descent: bool, full_reset: bool = False,
                refresh: bool = False, max_iters: int = 2**62, target_model: float = -math.inf,
                deadline: float | None = None) -> int:
        stop_lookups = min(stop_lookups, self.stop_lookups)
        deadline = self.deadline if deadline is None else min(deadline, self.deadline)
        target_fo = -math.inf if self.params.target_cost is None else self.params.target_cost
        while True:
            self._ensure_capacity()
            before = self.istate[K.ITERS]
            status = K.run(self.tour, self.pos, self.best, self.nbr, self.NC, self.G, self.D,
                           self.M, self.rng, self.params.perturbation_strength, self.fstate,
                           self.istate, init_descent, full_reset, refresh, stop_lookups,
                           max_iters, target_model, target_fo, deadline, self.hist_lookups,
                           self.hist_costs, self.hist_times, self.trace_on, self.keep_tours,
                           self.trace, self.work, self.queue, self.inq, self.qs, self.buf,
                           self.t0)
            if status != K.STATUS_FULL:
                self.status = status
                return status
            init_descent = False
            done = int(self.istate[K.ITERS] - before)
            max_iters -= done
            if done:
                full_reset = False

    # -- output

    def result(self, algorithm: str) -> SearchResult:
        inst = self.inst
        best = Tour.from_order(inst, self.best.copy())
        h = int(self.istate[K.HIST_LEN])
        trace = None
        if self.trace_on:
            m = int(self.istate[K.TRACE_LEN])
            fo, model, moves, dprev, dref, lookups, times, pert, tours = (
                a[:m].copy() for a in self.trace)
            trace = SearchTrace(inst.n, fo, model, moves, dprev, dref, lookups, times, pert,
                                strength=self.params.perturbation_strength,
                                tours=tours if self.keep_tours else None,
                                phases=tuple(self.phases))
        return SearchResult(
            algorithm=algorithm, seed=self.params.seed, best_tour=best, best_cost=best.cost,
            lookups=int(self.istate[K.LOOKUPS]), n=inst.n,
            elapsed=time.perf_counter() - self.t0,
            iterations=int(self.istate[K.ITERS]), moves=int(self.istate[K.MOVES]),
            perturbations=int(self.istate[K.PERTURBS]),
            status=_STATUS_NAMES.get(self.status, "budget"),
            history_lookups=self.hist_lookups[:h].copy(),
            history_times=self.hist_times[:h].copy(),
            history_costs=self.hist_costs[:h].copy(),
            trace=trace, phases=tuple(self.phases))


# --------------------------------------------------------------------------
# operators

def three_opt_descent(model: CostModel, start, neighbors: NeighborTable,
                      tracker: BestTracker | None = None) -> tuple[Tour, BestTracker]:
    """First-improvement 3-Opt descent on ``model`` from ``start``.

    The returned tour admits no improving 2- or 3-exchange among the
    candidate moves: don't-look bits alone can miss moves opened up by
    changes away from a city, so full sweeps repeat until one applies no
    move. (Inside ILS the cheaper single don't-look-bit pass is used.) The
    cost field is the original cost. ``tracker`` is
    updated with the best tour seen under the original costs along the way.
    """
    inst = model.base
    _check_searchable(inst)
    n = inst.n
    order = np.array(start.order if isinstance(start, Tour) else start, dtype=np.int64)
    if order.shape != (n,):
        raise ValueError(f"start has {order.size} cities, instance has {n}")
    lists = np.asarray(neighbors.lists)
    if lists.shape[0] != n:
        raise ValueError("neighbor table was built for a different instance size")
    tracker = BestTracker() if tracker is None else tracker
    start_cost = Tour.from_order(inst, order).cost
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    best = order.copy()
    args = model.kernel_args()
    G = _model_table(model, args)
    NC = np.empty(lists.shape)
    K.fill_neighbor_costs(NC, G, lists)
    fstate = np.array([start_cost, start_cost, _costs.order_cost(order, *args)])
    istate = np.zeros(K.N_ISTATE, dtype=np.int64)
    queue = np.zeros(n, dtype=np.int64)
    inq = np.zeros(n, dtype=np.bool_)
    qs = np.zeros(2, dtype=np.int64)
    K.descend_exact(order, pos, lists, NC, G, inst.dense, model.kind != "original", queue,
                    inq, qs, best, fstate, istate)
    # ``best`` holds the best tour under f_o seen during the descent
    seen = Tour.from_order(inst, best)
    if seen.cost < tracker.cost:
        tracker.order = seen.order
        tracker.cost = seen.cost
        tracker.updates += 1
    return Tour.from_order(inst, order), tracker


def double_bridge(t, rng: np.random.Generator, inst: TspInstance | None = None) -> Tour:
    """Cut the tour into A B C D and reconnect as A D C B (four new edges).

    The cut frame is rotated uniformly at random, and triples that would put
    two single-city segments next to each other are rejected, so exactly
    four edges change. The cost field is filled when ``inst`` is given.
    """
    order = np.array(t.order if isinstance(t, Tour) else t, dtype=np.int64)
    n = order.shape[0]
    if n < 8:
        raise ValueError(f"double bridge needs n >= 8, got {n}")
    pos = np.empty(n, dtype=np.int64)
    pos[order] = np.arange(n)
    K.double_bridge_inplace(order, pos, rng, np.empty(n, dtype=np.int64))
    if inst is not None:
        return Tour.from_order(inst, order)
    return Tour(order, math.nan)


# --------------------------------------------------------------------------
# algorithms

def ils(inst: TspInstance, params: SearchParams, *, reference=None, start=None) -> SearchResult:
    """Iterated 3-Opt: random start, descend, then {double bridge, descend}.

    Every new local optimum becomes the base of the next perturbation; the
    best tour under f_o is kept apart. ``reference`` (a tour) is only used
    for the trace's distance column.
    """
    eng = _Engine(inst, params, reference=reference, start=start)
    eng.set_model(original_model(inst), "original")
    eng.advance(eng.stop_lookups, init_descent=True)
    return eng.result("ils")


def ils_on_model(model: CostModel, params: SearchParams, *, reference=None, start=None,
                 target_model: float | None = None, keep_tours: bool = False) -> SearchResult:
    """ILS descending on a fixed ``model`` (no hull refresh), always traced.

    Stops early once the current local optimum's model value is at most
    ``target_model`` (plus a relative 1e-9 slack for float summation order).
    Used for landscape sampling.
    """
    inst = model.base
    eng = _Engine(inst, params, reference=reference, start=start, trace=True,
                  keep_tours=keep_tours)
    eng.set_model(model, model.kind if model.kind == "original" else
                  f"{model.kind} param={model.param:g}")
    target = -math.inf
    if target_model is not None:
        target = target_model + 1e-9 * max(1.0, abs(target_model))
    eng.advance(eng.stop_lookups, init_descent=True, target_model=target)
    return eng.result("ils")


def _refresh_each_iteration(params: SearchParams, n: int) -> bool:
    if params.refresh == "auto":
        return n <= AUTO_REFRESH_LIMIT
    return params.refresh == "iteration"


def lsils(inst: TspInstance, params: SearchParams, *, reference=None, start=None) -> SearchResult:
    """Landscape-smoothing ILS.

    Descends first on f_o, then iterates on g = (1 - lam) f_o + lam f_c with
    lam taken from ``params.lambda_schedule`` over the budget fraction used.
    The hull TSP is anchored at the best tour under f_o: rebuilt whenever
    lam changes and, in per-iteration refresh mode, whenever that tour
    improves. With lam = 0 throughout the run is event-for-event identical
    to ``ils`` with the same seed.
    """
    eng = _Engine(inst, params, reference=reference, start=start)
    eng.set_model(original_model(inst), "original")
    eng.advance(eng.stop_lookups, init_descent=True, max_iters=0)
    refresh = _refresh_each_iteration(params, inst.n)
    by_time = params.budget_evals is None
    prev_lam = 0.0
    for start_frac, end_frac, lam in params.lambda_schedule.segments():
        if eng.exhausted():
            break
        if by_time:
            stop = eng.stop_lookups
            deadline = eng.t0 + end_frac * params.budget_seconds
            if time.perf_counter() >= deadline:
                continue
        else:
            stop = int(math.ceil(end_frac * params.budget_evals * inst.n))
            deadline = None
            if eng.istate[K.LOOKUPS] >= stop:
                continue
        hull = construct_convex_hull_tsp(inst, eng.best)
        eng.istate[K.BEST_CHANGED] = 0
        eng.set_model(CostModel("hc", inst, lam, hull=hull), f"hc lambda={lam:g}")
        eng.advance(stop, init_descent=False, full_reset=(lam > 0 or prev_lam > 0),
                    refresh=refresh, deadline=deadline)
        prev_lam = lam
    return eng.result("lsils")


def smoothing_models(inst: TspInstance, kind: str) -> list[tuple[CostModel, str]]:
    """The per-round models of GH or SSA (built up front so bad input fails early)."""
    if kind == "gh":
        return [(CostModel("gh", inst, a), f"gh alpha={a}") for a in GH_ALPHAS]
    if kind == "ssa":
        out = []
        for a, concave in SSA_ROUNDS:
            kind_name = "ssa_concave" if concave else "ssa_convex"
            label = f"ssa alpha=1/{a}" if concave else f"ssa alpha={a}"
            out.append((CostModel(kind_name, inst, a), label))
        return out
    raise ValueError(f"unknown smoothing kind {kind!r}")


def smoothing_schedule_search(inst: TspInstance, params: SearchParams, kind: str, *,
                              reference=None, start=None) -> SearchResult:
    """GH or SSA: one full descent per smoothing round, then ILS on f_o.

    Each round descends from the previous round's local optimum (every city
    active, no kick). Once the rounds are done the run continues as plain
    ILS on the original costs until the budget is spent.
    """
    rounds = smoothing_models(inst, kind)
    eng = _Engine(inst, params, reference=reference, start=start)
    for model, label in rounds:
        if eng.exhausted():
            break
        eng.set_model(model, label)
        eng.advance(eng.stop_lookups, init_descent=True, max_iters=0)
    if not eng.exhausted():
        eng.set_model(original_model(inst), "original")
        eng.advance(eng.stop_lookups, init_descent=False)
    return eng.result(kind)


ALGORITHMS = ("ils", "lsils", "gh", "ssa")


def run_algorithm(name: str, inst: TspInstance, params: SearchParams, **kw) -> SearchResult:
    if name == "ils":
        return ils(inst, params, **kw)
    if name == "lsils":
        return lsils(inst, params, **kw)
    if name in ("gh", "ssa"):
        return smoothing_schedule_search(inst, params, name, **kw)
    raise ValueError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
