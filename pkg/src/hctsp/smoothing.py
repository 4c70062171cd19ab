"""Convex-hull companion TSP, the homotopic blend, and power smoothing.

All models here are immutable values. A search runs against a ``CostModel``;
``CostModel.kernel_args`` flattens it into the argument tuple the compiled
kernels take.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass

import numpy as np

from . import _costs
from .tsp_model import Tour, TspInstance, check_permutation

MODEL_KINDS = ("original", "hc", "gh", "ssa_convex", "ssa_concave")

_interval_cache: "weakref.WeakKeyDictionary[TspInstance, float]" = weakref.WeakKeyDictionary()
_stats_cache: "weakref.WeakKeyDictionary[TspInstance, tuple]" = weakref.WeakKeyDictionary()


def city_interval(inst: TspInstance) -> float:
    """Mean nearest-neighbor cost: (1/n) * sum_i min_{j != i} c(i, j)."""
    if inst in _interval_cache:
        return _interval_cache[inst]
    n = inst.n
    total = 0.0
    block = max(1, 2_000_000 // n)
    for start in range(0, n, block):
        rows = np.arange(start, min(n, start + block))
        costs = _costs.cost_rows(rows, n, *inst.cost_args())
        costs[np.arange(rows.size), rows] = np.inf
        total += costs.min(axis=1).sum()
    value = total / n
    _interval_cache[inst] = value
    return value


def chord_table(n: int, radius: float) -> np.ndarray:
    """Chord length for each circular rank separation 0..n//2."""
    d = np.arange(n // 2 + 1, dtype=np.float64)
    table = 2.0 * radius * np.sin(math.pi * d / n)
    table[0] = 0.0
    return table


@dataclass(frozen=True, eq=False)
class ConvexHullTsp:
    """n cities evenly spaced on a circle, placed in anchor-tour order."""

    n: int
    interval: float
    radius: float
    rank: np.ndarray

    def __post_init__(self):
        rank = np.ascontiguousarray(self.rank, dtype=np.int64)
        check_permutation(rank)
        rank.setflags(write=False)
        object.__setattr__(self, "rank", rank)
        chords = chord_table(self.n, self.radius)
        chords.setflags(write=False)
        object.__setattr__(self, "_chords", chords)

    @property
    def chords(self) -> np.ndarray:
        return self._chords

    def separation(self, i: int, j: int) -> int:
        d = abs(int(self.rank[i]) - int(self.rank[j]))
        return min(d, self.n - d)


def hull_radius(n: int, interval: float) -> float:
    """Radius whose chord between rank-adjacent cities equals ``interval``."""
    return interval / (2.0 * math.sin(math.pi / n))


def construct_convex_hull_tsp(inst: TspInstance, anchor) -> ConvexHullTsp:
    order = anchor.order if isinstance(anchor, Tour) else np.asarray(anchor, dtype=np.int64)
    if order.shape != (inst.n,):
        raise ValueError(f"anchor has {order.size} cities, instance has {inst.n}")
    check_permutation(order)
    interval = city_interval(inst)
    rank = np.empty(inst.n, dtype=np.int64)
    rank[order] = np.arange(inst.n)
    return ConvexHullTsp(inst.n, interval, hull_radius(inst.n, interval), rank)


def hull_edge_cost(hull: ConvexHullTsp, i: int, j: int) -> float:
    if not (0 <= i < hull.n and 0 <= j < hull.n):
        raise IndexError(f"city index out of range for n={hull.n}: ({i}, {j})")
    return float(hull.chords[hull.separation(i, j)])


@dataclass(frozen=True, eq=False)
class HcTransform:
    """Blend g = (1 - lam) * f_o + lam * f_c of an instance and its hull TSP."""

    base: TspInstance
    hull: ConvexHullTsp
    lam: float

    def __post_init__(self):
        if not 0.0 <= self.lam <= 1.0:
            raise ValueError(f"lambda must lie in [0, 1], got {self.lam}")
        if self.hull.n != self.base.n:
            raise ValueError("hull and base instance sizes differ")

    def model(self) -> "CostModel":
        return CostModel("hc", self.base, self.lam, hull=self.hull)


def hc_transform(inst: TspInstance, anchor, lam: float) -> HcTransform:
    return HcTransform(inst, construct_convex_hull_tsp(inst, anchor), float(lam))


def hc_edge_cost(t: HcTransform, i: int, j: int) -> float:
    if not (0 <= i < t.base.n and 0 <= j < t.base.n):
        raise IndexError(f"city index out of range for n={t.base.n}: ({i}, {j})")
    return t.model().edge(i, j)


def hc_objective(t: HcTransform, tour) -> float:
    """g(tour) evaluated edge by edge under the blended costs."""
    return t.model().tour_value(tour)


# --------------------------------------------------------------------------
# cost models

def normalization_stats(inst: TspInstance) -> tuple[float, float, float]:
    """(c_min, c_max, mean of min-max normalised costs) over all edges."""
    if inst in _stats_cache:
        return _stats_cache[inst]
    lo, hi, mean = _costs.edge_stats(inst.n, *inst.cost_args())
    cbar = (mean - lo) / (hi - lo) if hi > lo else float("nan")
    stats = (float(lo), float(hi), float(cbar))
    _stats_cache[inst] = stats
    return stats


@dataclass(frozen=True, eq=False)
class CostModel:
    """The objective a local search descends on.

    ``kind`` is one of original, hc (``param`` = lambda, ``hull`` required),
    gh / ssa_convex (``param`` = alpha, exponent alpha) or ssa_concave
    (exponent 1/alpha). GH and SSA work on min-max normalised costs.
    """

    kind: str
    base: TspInstance
    param: float = 0.0
    hull: ConvexHullTsp | None = None

    def __post_init__(self):
        if self.kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        if self.kind == "hc":
            if self.hull is None:
                raise ValueError("hc model needs a hull")
            if not 0.0 <= self.param <= 1.0:
                raise ValueError(f"lambda must lie in [0, 1], got {self.param}")
        elif self.kind != "original":
            if self.param < 1.0:
                raise ValueError(f"smoothing factor alpha must be >= 1, got {self.param}")
            lo, hi, _ = normalization_stats(self.base)
            if not hi > lo:
                raise ValueError("degenerate normalisation: all edge costs are equal")

    @property
    def exponent(self) -> float:
        if self.kind == "ssa_concave":
            return 1.0 / self.param
        return self.param

    @property
    def normalization(self) -> tuple[float, float, float] | None:
        if self.kind in ("original", "hc"):
            return None
        return normalization_stats(self.base)

    def kernel_args(self) -> tuple:
        dmat, pts, ckind = self.base.cost_args()
        # ranks are passed as a private writable copy (the kernels may rebuild
        # them in place); every other array stays read-only
        empty_i = np.zeros(0, dtype=np.int64)
        empty_f = np.zeros(0)
        empty_f.setflags(write=False)
        if self.kind == "original":
            return (_costs.MODE_ORIGINAL, dmat, pts, ckind, empty_i, empty_f,
                    0.0, 0.0, 1.0, 0.0, 1.0)
        if self.kind == "hc":
            return (_costs.MODE_HC, dmat, pts, ckind, self.hull.rank.copy(), self.hull.chords,
                    float(self.param), 0.0, 1.0, 0.0, 1.0)
        lo, hi, cbar = normalization_stats(self.base)
        return (_costs.MODE_POWER, dmat, pts, ckind, empty_i, empty_f,
                0.0, lo, hi - lo, cbar, float(self.exponent))

    def edge(self, i: int, j: int) -> float:
        n = self.base.n
        if not (0 <= i < n and 0 <= j < n):
            raise IndexError(f"city index out of range for n={n}: ({i}, {j})")
        return float(_costs.model_cost(int(i), int(j), *self.kernel_args()))

    def tour_value(self, tour) -> float:
        order = tour.order if isinstance(tour, Tour) else np.asarray(tour, dtype=np.int64)
        if order.shape != (self.base.n,):
            raise ValueError(f"tour has {order.size} cities, instance has {self.base.n}")
        check_permutation(order)
        return float(_costs.order_cost(np.ascontiguousarray(order), *self.kernel_args()))


SmoothedCostModel = CostModel


def original_model(inst: TspInstance) -> CostModel:
    return CostModel("original", inst)


def gh_model(inst: TspInstance, alpha: float) -> CostModel:
    return CostModel("gh", inst, float(alpha))


def ssa_model(inst: TspInstance, alpha: float, concave: bool) -> CostModel:
    return CostModel("ssa_concave" if concave else "ssa_convex", inst, float(alpha))


def gh_smoothed_cost(model: CostModel, i: int, j: int) -> float:
    if model.kind not in ("gh", "ssa_convex", "ssa_concave"):
        raise ValueError(f"not a power-smoothing model: {model.kind}")
    return model.edge(i, j)


def smooth_normalized(x, cbar: float, exponent: float):
    """The power transform applied to already-normalised cost(s) ``x``."""
    x = np.asarray(x, dtype=np.float64)
    above = x >= cbar
    out = np.empty_like(x)
    out[above] = cbar + (x[above] - cbar) ** exponent
    out[~above] = cbar - (cbar - x[~above]) ** exponent
    return out
