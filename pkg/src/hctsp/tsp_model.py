"""Instances, tours, TSPLIB I/O, neighbor lists and random instances."""

from __future__ import annotations

import io
import re
from dataclasses import dataclass, field
from functools import cached_property
from importlib import resources
from pathlib import Path
from typing import Iterable

import numpy as np

from . import _costs

COST_KINDS = ("euclid2d", "geographic", "explicit")

# instances up to this size keep a dense float64 cost table (128 MB at 4000)
DENSE_LIMIT = 4000

# TSPLIB optimal tour lengths for the bundled instances
KNOWN_OPTIMA = {
    "eil51": 426,
    "berlin52": 7542,
    "st70": 675,
    "pr76": 108159,
    "rat99": 1211,
    "rd100": 7910,
    "ch130": 6110,
    "kroA150": 26524,
    "gr96": 55209,
    "brazil58": 25395,
    "gr120": 6942,
    "si175": 21407,
    "rd400": 15281,
}


class TsplibError(ValueError):
    """Malformed or unsupported TSPLIB input."""

    def __init__(self, message: str, lineno: int | None = None):
        self.lineno = lineno
        if lineno is not None:
            message = f"line {lineno}: {message}"
        super().__init__(message)


def _frozen(a: np.ndarray | None) -> np.ndarray | None:
    if a is not None:
        a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class TspInstance:
    """Symmetric TSP instance with TSPLIB cost semantics.

    Exactly one of ``coords`` (euclid2d, geographic) or ``matrix``
    (explicit) is populated. Arrays are read-only, so an instance can be
    shared freely between runs.
    """

    name: str
    n: int
    cost_kind: str
    coords: np.ndarray | None = None
    matrix: np.ndarray | None = None

    def __post_init__(self):
        if self.cost_kind not in COST_KINDS:
            raise ValueError(f"unknown cost kind {self.cost_kind!r}")
        if self.n < 3:
            raise ValueError(f"need at least 3 cities, got {self.n}")
        if self.cost_kind == "explicit":
            if self.matrix is None or self.coords is not None:
                raise ValueError("explicit instances carry a matrix and no coordinates")
            m = np.ascontiguousarray(self.matrix, dtype=np.float64)
            if m.shape != (self.n, self.n):
                raise ValueError(f"matrix shape {m.shape} does not match n={self.n}")
            if not np.all(np.isfinite(m)) or np.any(m < 0):
                raise ValueError("matrix costs must be finite and non-negative")
            if not np.array_equal(m, m.T):
                raise ValueError("matrix must be symmetric")
            if np.any(np.diag(m) != 0):
                raise ValueError("matrix diagonal must be zero")
            object.__setattr__(self, "matrix", _frozen(m.copy()))
        else:
            if self.coords is None or self.matrix is not None:
                raise ValueError("coordinate instances carry coords and no matrix")
            c = np.ascontiguousarray(self.coords, dtype=np.float64)
            if c.shape != (self.n, 2):
                raise ValueError(f"coords shape {c.shape} does not match n={self.n}")
            if not np.all(np.isfinite(c)):
                raise ValueError("coordinates must be finite")
            object.__setattr__(self, "coords", _frozen(c.copy()))

    @property
    def kind_code(self) -> int:
        return COST_KINDS.index(self.cost_kind)

    @cached_property
    def points(self) -> np.ndarray:
        """Coordinates as consumed by the compiled cost function."""
        if self.cost_kind == "geographic":
            return _frozen(_costs.geo_radians(self.coords))
        if self.cost_kind == "euclid2d":
            return self.coords
        return _frozen(np.zeros((self.n, 2)))

    @cached_property
    def dense(self) -> np.ndarray:
        """Dense cost table, or an empty (0, 0) array above ``DENSE_LIMIT``."""
        if self.matrix is not None:
            return self.matrix
        if self.n > DENSE_LIMIT:
            return _frozen(np.empty((0, 0)))
        return _frozen(_costs.dense_matrix(self.n, self.points, self.kind_code))

    def cost_args(self):
        """(dmat, pts, ckind) triple for the compiled kernels."""
        return self.dense, self.points, self.kind_code

    def cost_matrix(self) -> np.ndarray:
        """Full n x n cost table (computed on demand for large instances)."""
        if self.dense.shape[0]:
            return self.dense
        return _costs.cost_rows(np.arange(self.n), self.n, *self.cost_args())


@dataclass(eq=False)
class Tour:
    """A tour: city sequence, its cached cost and a city -> position index."""

    order: np.ndarray
    cost: float
    pos: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self.order = np.ascontiguousarray(self.order, dtype=np.int64)
        self.pos = check_permutation(self.order)

    @classmethod
    def from_order(cls, inst: TspInstance, order: Iterable[int]) -> "Tour":
        order = np.asarray(list(order) if not isinstance(order, np.ndarray) else order,
                           dtype=np.int64)
        if order.shape != (inst.n,):
            raise ValueError(f"tour has {order.size} cities, instance has {inst.n}")
        return cls(order, tour_cost(inst, order))

    @property
    def n(self) -> int:
        return self.order.shape[0]

    def copy(self) -> "Tour":
        return Tour(self.order.copy(), self.cost)

    def reversed(self) -> "Tour":
        return Tour(self.order[::-1].copy(), self.cost)

    def __len__(self):
        return self.n


@dataclass(frozen=True, eq=False)
class NeighborTable:
    """k nearest distinct cities per city, ascending cost, ties by index."""

    k: int
    lists: np.ndarray

    def __getitem__(self, city: int) -> np.ndarray:
        return self.lists[city]


def check_permutation(order: np.ndarray) -> np.ndarray:
    """Validate that ``order`` is a permutation of 0..n-1; return positions."""
    n = order.shape[0]
    if order.ndim != 1 or n == 0:
        raise ValueError("tour must be a non-empty 1-d sequence")
    if order.min() < 0 or order.max() >= n:
        raise ValueError("tour contains out-of-range city indices")
    pos = np.full(n, -1, dtype=np.int64)
    pos[order] = np.arange(n)
    if np.any(pos < 0):
        raise ValueError("tour is not a permutation (repeated cities)")
    return pos


def _as_order(t) -> np.ndarray:
    return t.order if isinstance(t, Tour) else np.asarray(t, dtype=np.int64)


def edge_cost(inst: TspInstance, i: int, j: int) -> float:
    """TSPLIB cost of edge (i, j)."""
    if not (0 <= i < inst.n and 0 <= j < inst.n):
        raise IndexError(f"city index out of range for n={inst.n}: ({i}, {j})")
    return float(_costs.base_cost(int(i), int(j), *inst.cost_args()))


def tour_cost(inst: TspInstance, t) -> float:
    """Length of the closed tour, recomputed from scratch."""
    order = _as_order(t)
    if order.shape != (inst.n,):
        raise ValueError(f"tour has {order.size} cities, instance has {inst.n}")
    check_permutation(order)
    dense = inst.dense
    if dense.shape[0]:
        return float(dense[order, np.roll(order, -1)].sum())
    empty = np.zeros(0, dtype=np.int64)
    return float(_costs.order_cost(order, 0, *inst.cost_args(), empty, np.zeros(0),
                                   0.0, 0.0, 1.0, 0.0, 1.0))


def edge_keys(t) -> np.ndarray:
    """Sorted undirected edge keys ``min*n + max`` of a tour."""
    order = _as_order(t)
    n = order.shape[0]
    nxt = np.roll(order, -1)
    lo = np.minimum(order, nxt)
    hi = np.maximum(order, nxt)
    return np.sort(lo * n + hi)


def tour_distance(a, b) -> int:
    """Number of undirected edges of ``a`` missing from ``b``."""
    oa, ob = _as_order(a), _as_order(b)
    if oa.shape != ob.shape:
        raise ValueError(f"tour lengths differ: {oa.size} vs {ob.size}")
    common = np.intersect1d(edge_keys(oa), edge_keys(ob), assume_unique=True)
    return int(oa.shape[0] - common.shape[0])


def nearest_neighbor_lists(inst: TspInstance, k: int) -> NeighborTable:
    if not 1 <= k <= inst.n - 1:
        raise ValueError(f"k must be in [1, {inst.n - 1}], got {k}")
    n = inst.n
    lists = np.empty((n, k), dtype=np.int64)
    idx = np.arange(n)
    block = max(1, 2_000_000 // n)
    for start in range(0, n, block):
        rows = idx[start:start + block]
        costs = inst.cost_matrix()[rows] if inst.dense.shape[0] else \
            _costs.cost_rows(rows, n, *inst.cost_args())
        costs = costs.copy()
        costs[np.arange(rows.size), rows] = np.inf
        for r, city in enumerate(rows):
            row = costs[r]
            if k < n - 1:
                kth = np.partition(row, k - 1)[k - 1]
                cand = np.flatnonzero(row <= kth)
            else:
                cand = np.flatnonzero(np.isfinite(row))
            # lexsort: last key is primary
            chosen = cand[np.lexsort((cand, row[cand]))][:k]
            lists[city] = chosen
    lists.setflags(write=False)
    return NeighborTable(k, lists)


def gen_random_euclidean(n: int, seed: int, side: float = 1_000_000.0,
                         name: str | None = None) -> TspInstance:
    """Uniform random points in [0, side]^2 with EUC_2D costs."""
    if n < 3:
        raise ValueError(f"need at least 3 cities, got {n}")
    if not side > 0:
        raise ValueError("side must be positive")
    rng = np.random.default_rng(seed)
    coords = rng.uniform(0.0, side, size=(n, 2))
    return TspInstance(name or f"rand{n}", n, "euclid2d", coords=coords)


# --------------------------------------------------------------------------
# TSPLIB parsing

_SUPPORTED_WEIGHT_TYPES = {"EUC_2D": "euclid2d", "GEO": "geographic", "EXPLICIT": "explicit"}
_MATRIX_FORMATS = ("FULL_MATRIX", "UPPER_ROW", "LOWER_DIAG_ROW", "UPPER_DIAG_ROW")
_SECTION_RE = re.compile(r"^[A-Z_]+_SECTION$")


def _expected_entries(fmt: str, n: int) -> int:
    if fmt == "FULL_MATRIX":
        return n * n
    if fmt == "UPPER_ROW":
        return n * (n - 1) // 2
    return n * (n + 1) // 2


def _fill_matrix(fmt: str, n: int, values: np.ndarray) -> np.ndarray:
    m = np.zeros((n, n))
    if fmt == "FULL_MATRIX":
        m[:] = values.reshape(n, n)
    elif fmt == "UPPER_ROW":
        m[np.triu_indices(n, 1)] = values
        m = m + m.T
    elif fmt == "UPPER_DIAG_ROW":
        m[np.triu_indices(n)] = values
        m = np.triu(m, 1) + np.triu(m, 1).T
    else:  # LOWER_DIAG_ROW
        m[np.tril_indices(n)] = values
        m = np.tril(m, -1) + np.tril(m, -1).T
    return m


def parse_tsplib(text) -> TspInstance:
    """Parse a TSPLIB ``TYPE: TSP`` file (EUC_2D, GEO or EXPLICIT)."""
    if not isinstance(text, str):
        text = text.read()
    lines = text.splitlines()
    header: dict[str, tuple[str, int]] = {}
    coords = None
    weights: list[tuple[str, int]] = []
    i = 0
    while i < len(lines):
        lineno = i + 1
        line = lines[i].strip()
        i += 1
        if not line:
            continue
        if line == "EOF":
            break
        if ":" in line:
            key, _, value = line.partition(":")
            key = key.strip().upper()
            if not re.fullmatch(r"[A-Z_]+", key):
                raise TsplibError(f"malformed header line {line!r}", lineno)
            header[key] = (value.strip(), lineno)
            continue
        key = line.split()[0].upper()
        if key == "NODE_COORD_SECTION":
            n = _dimension(header, lineno)
            coords = np.full((n, 2), np.nan)
            seen = 0
            while seen < n:
                if i >= len(lines):
                    raise TsplibError(f"NODE_COORD_SECTION ended after {seen} of {n} nodes",
                                      len(lines))
                raw = lines[i].strip()
                lineno = i + 1
                i += 1
                if not raw:
                    continue
                parts = raw.split()
                if len(parts) != 3:
                    raise TsplibError(f"expected 'index x y', got {raw!r}", lineno)
                try:
                    idx = int(parts[0])
                    x, y = float(parts[1]), float(parts[2])
                except ValueError:
                    raise TsplibError(f"non-numeric coordinate in {raw!r}", lineno) from None
                if not 1 <= idx <= n:
                    raise TsplibError(f"node index {idx} outside 1..{n}", lineno)
                if not np.isnan(coords[idx - 1, 0]):
                    raise TsplibError(f"duplicate node index {idx}", lineno)
                coords[idx - 1] = (x, y)
                seen += 1
        elif key == "EDGE_WEIGHT_SECTION":
            while i < len(lines):
                raw = lines[i].strip()
                if raw == "EOF" or _SECTION_RE.match(raw.split()[0] if raw else "") \
                        or (":" in raw):
                    break
                weights.extend((tok, i + 1) for tok in raw.split())
                i += 1
        elif _SECTION_RE.match(key):
            # display data and the like: skip until the next keyword
            while i < len(lines):
                raw = lines[i].strip()
                if raw == "EOF" or ":" in raw or (raw and _SECTION_RE.match(raw.split()[0])):
                    break
                i += 1
        else:
            raise TsplibError(f"malformed header line {line!r}", lineno)

    ptype, plineno = header.get("TYPE", ("", 1))
    if not ptype.split() or ptype.split()[0].upper() != "TSP":
        raise TsplibError(f"unsupported problem TYPE {ptype!r} (only TSP)", plineno)
    n = _dimension(header, len(lines))
    wtype, wline = header.get("EDGE_WEIGHT_TYPE", ("", len(lines)))
    wtype = wtype.upper()
    if wtype not in _SUPPORTED_WEIGHT_TYPES:
        raise TsplibError(f"unsupported EDGE_WEIGHT_TYPE {wtype!r}", wline)
    name = header.get("NAME", ("unnamed", 0))[0] or "unnamed"
    kind = _SUPPORTED_WEIGHT_TYPES[wtype]
    if kind == "explicit":
        fmt, fline = header.get("EDGE_WEIGHT_FORMAT", ("", wline))
        fmt = fmt.upper()
        if fmt not in _MATRIX_FORMATS:
            raise TsplibError(f"unsupported EDGE_WEIGHT_FORMAT {fmt!r}", fline)
        expected = _expected_entries(fmt, n)
        if len(weights) != expected:
            where = weights[-1][1] if weights else len(lines)
            raise TsplibError(
                f"EDGE_WEIGHT_SECTION has {len(weights)} entries, {fmt} with "
                f"DIMENSION {n} needs {expected}", where)
        values = np.empty(expected)
        for k, (tok, ln) in enumerate(weights):
            try:
                values[k] = float(tok)
            except ValueError:
                raise TsplibError(f"non-numeric edge weight {tok!r}", ln) from None
        matrix = _fill_matrix(fmt, n, values)
        if fmt == "FULL_MATRIX" and not np.array_equal(matrix, matrix.T):
            raise TsplibError("FULL_MATRIX is not symmetric", weights[0][1])
        np.fill_diagonal(matrix, 0.0)
        return TspInstance(name, n, kind, matrix=matrix)
    if coords is None:
        raise TsplibError("missing NODE_COORD_SECTION", len(lines))
    return TspInstance(name, n, kind, coords=coords)


def _dimension(header, lineno) -> int:
    if "DIMENSION" not in header:
        raise TsplibError("DIMENSION must precede the data sections", lineno)
    value, ln = header["DIMENSION"]
    try:
        n = int(value)
    except ValueError:
        raise TsplibError(f"non-integer DIMENSION {value!r}", ln) from None
    if n < 3:
        raise TsplibError(f"DIMENSION must be at least 3, got {n}", ln)
    return n


def read_instance(path) -> TspInstance:
    with open(path) as fh:
        return parse_tsplib(fh)


def write_tsplib(inst: TspInstance, fh=None) -> str:
    """Serialise a coordinate instance as TSPLIB text (round-trips exactly)."""
    if inst.cost_kind == "explicit":
        raise ValueError("only coordinate instances are written")
    wtype = "EUC_2D" if inst.cost_kind == "euclid2d" else "GEO"
    out = io.StringIO()
    out.write(f"NAME: {inst.name}\nTYPE: TSP\nDIMENSION: {inst.n}\n")
    out.write(f"EDGE_WEIGHT_TYPE: {wtype}\nNODE_COORD_SECTION\n")
    for k, (x, y) in enumerate(inst.coords, start=1):
        out.write(f"{k} {float(x)!r} {float(y)!r}\n")
    out.write("EOF\n")
    text = out.getvalue()
    if fh is not None:
        fh.write(text)
    return text


# --------------------------------------------------------------------------
# tour files

def parse_tour(text, n: int | None = None) -> np.ndarray:
    """Read a TSPLIB ``.tour`` file (1-based) or our index-per-line format.

    Our format: first line ``<name> <cost>``, then one 0-based city index per
    line.
    """
    if not isinstance(text, str):
        text = text.read()
    lines = [ln.strip() for ln in text.splitlines()]
    if any(ln.upper().startswith("TOUR_SECTION") for ln in lines):
        start = next(k for k, ln in enumerate(lines) if ln.upper().startswith("TOUR_SECTION"))
        cities = []
        for ln in lines[start + 1:]:
            for tok in ln.split():
                v = int(tok)
                if v == -1:
                    break
                cities.append(v - 1)
            else:
                continue
            break
        order = np.array(cities, dtype=np.int64)
    else:
        body = [ln for ln in lines[1:] if ln]
        order = np.array([int(ln) for ln in body], dtype=np.int64)
    if n is not None and order.shape[0] != n:
        raise ValueError(f"tour has {order.shape[0]} cities, expected {n}")
    check_permutation(order)
    return order


def format_tour(name: str, t: Tour) -> str:
    cost = t.cost
    cost_txt = repr(int(cost)) if float(cost).is_integer() else repr(float(cost))
    return f"{name} {cost_txt}\n" + "".join(f"{c}\n" for c in t.order)


def read_tour(path, inst: TspInstance) -> Tour:
    with open(path) as fh:
        return Tour.from_order(inst, parse_tour(fh, inst.n))


# --------------------------------------------------------------------------
# bundled TSPLIB data

def bundled_names() -> list[str]:
    files = resources.files("hctsp.data").iterdir()
    return sorted(p.name[:-4] for p in files if p.name.endswith(".tsp"))


def load_bundled(name: str) -> TspInstance:
    ref = resources.files("hctsp.data") / f"{name}.tsp"
    if not ref.is_file():
        raise FileNotFoundError(f"no bundled instance {name!r}")
    return parse_tsplib(ref.read_text())


def bundled_optimal_tour(name: str, inst: TspInstance | None = None) -> Tour:
    inst = inst or load_bundled(name)
    ref = resources.files("hctsp.data") / f"{name}.opt.tour"
    if not ref.is_file():
        raise FileNotFoundError(f"no archived optimal tour for {name!r}")
    return Tour.from_order(inst, parse_tour(ref.read_text(), inst.n))


def load_instance(spec: str) -> TspInstance:
    """Resolve a path, a bundled name, or ``rand:<n>:<seed>[:<side>]``."""
    if spec.startswith("rand:"):
        parts = spec.split(":")[1:]
        if len(parts) not in (2, 3):
            raise ValueError(f"generator spec must be rand:<n>:<seed>[:<side>], got {spec!r}")
        n, seed = int(parts[0]), int(parts[1])
        side = float(parts[2]) if len(parts) == 3 else 1_000_000.0
        return gen_random_euclidean(n, seed, side)
    path = Path(spec)
    if path.is_file():
        return read_instance(path)
    if spec in bundled_names():
        return load_bundled(spec)
    raise FileNotFoundError(f"instance {spec!r} is neither a file nor a bundled name")


def random_tour(inst: TspInstance, rng: np.random.Generator) -> Tour:
    return Tour.from_order(inst, rng.permutation(inst.n))

