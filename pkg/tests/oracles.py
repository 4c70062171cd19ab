"""Slow, independent reference implementations used by the tests.

Nothing here calls into the compiled kernels or reuses library formulas:
costs come from plain Python loops, hull costs from explicit circle
coordinates, and move validity from a graph walk.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


def euc2d(coords: np.ndarray) -> np.ndarray:
    """TSPLIB EUC_2D table with plain Python rounding."""
    n = len(coords)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i != j:
                dx = coords[i][0] - coords[j][0]
                dy = coords[i][1] - coords[j][1]
                out[i, j] = int(math.sqrt(dx * dx + dy * dy) + 0.5)
    return out


def cycle_cost(order, cost) -> float:
    n = len(order)
    return float(sum(cost[order[i]][order[(i + 1) % n]] for i in range(n)))


def mean_nearest(cost: np.ndarray) -> float:
    n = cost.shape[0]
    return sum(min(cost[i][j] for j in range(n) if j != i) for i in range(n)) / n


def circle_table(anchor, interval: float) -> np.ndarray:
    """Euclidean distances of cities placed on a circle in anchor order."""
    n = len(anchor)
    radius = interval / (2 * math.sin(math.pi / n))
    xy = {}
    for k, city in enumerate(anchor):
        theta = 2 * math.pi * k / n
        xy[int(city)] = (radius * math.cos(theta), radius * math.sin(theta))
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            out[i, j] = math.dist(xy[i], xy[j])
    return out


def all_tours(n: int):
    """Every Hamiltonian cycle once: city 0 first, direction fixed."""
    for perm in itertools.permutations(range(1, n)):
        if perm[0] < perm[-1]:
            yield (0,) + perm


def two_opt_neighbors(order):
    n = len(order)
    for i in range(n - 1):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            yield order[:i + 1] + tuple(reversed(order[i + 1:j + 1])) + order[j + 1:]


def is_two_optimal(order, cost, rel_tol=1e-12) -> bool:
    base = cycle_cost(order, cost)
    return all(cycle_cost(nb, cost) >= base - rel_tol * max(1.0, abs(base))
               for nb in two_opt_neighbors(order))


def improving_two_exchange(order, cost, eps=1e-9):
    """First pair of positions whose 2-exchange lowers the cost, or None."""
    n = len(order)
    for i in range(n):
        for j in range(i + 2, n):
            if i == 0 and j == n - 1:
                continue
            a, b = order[i], order[i + 1]
            c, d = order[j], order[(j + 1) % n]
            if cost[a][c] + cost[b][d] < cost[a][b] + cost[c][d] - eps:
                return i, j
    return None


def _edge_set(order):
    n = len(order)
    return {frozenset((int(order[i]), int(order[(i + 1) % n]))) for i in range(n)}


def _is_hamiltonian(edges: list, n: int) -> bool:
    """Do ``edges`` (list, multiplicity kept) form one cycle through n cities?"""
    if len(edges) != n or any(len(e) != 2 for e in edges):
        return False
    adj = {v: [] for v in range(n)}
    for e in edges:
        a, b = tuple(e)
        adj[a].append(b)
        adj[b].append(a)
    if any(len(v) != 2 for v in adj.values()):
        return False
    prev, cur, seen = 0, adj[0][0], 1
    while cur != 0 and seen <= n:
        seen += 1
        a, b = adj[cur]
        prev, cur = cur, (b if a == prev else a)
    return cur == 0 and seen == n


def improving_candidate_move(order, cost, neighbors, eps=1e-9):
    """Search the candidate 2-/3-exchange neighbourhood for an improvement.

    Candidates follow the usual sequential rule: remove (t1, t2) with t2 a
    tour neighbour of t1, add (t2, t3) for t3 in N(t2) with positive partial
    gain, remove (t3, t4) with t4 a tour neighbour of t3, then either close
    with (t4, t1) or add (t4, t5) for t5 in N(t4) with positive partial gain,
    remove (t5, t6) and close with (t6, t1). t1..t4 must be distinct, so the
    single-city insertion of t1 itself (t4 = t1) is not part of the set. Validity is decided by walking
    the resulting edge multiset. Returns the improving sequence or None.
    """
    n = len(order)
    order = [int(c) for c in order]
    pos = {c: i for i, c in enumerate(order)}
    edges = _edge_set(order)

    def tn(c):
        p = pos[c]
        return order[(p - 1) % n], order[(p + 1) % n]

    for t1 in order:
        for t2 in tn(t1):
            for t3 in neighbors[t2]:
                t3 = int(t3)
                g1 = cost[t1][t2] - cost[t2][t3]
                if g1 <= eps:
                    break
                if t3 in (t1, t2) or frozenset((t2, t3)) in edges:
                    continue
                for t4 in tn(t3):
                    if t4 in (t1, t2):
                        continue
                    removed = [frozenset((t1, t2)), frozenset((t3, t4))]
                    gain = g1 + cost[t3][t4] - cost[t4][t1]
                    if gain > eps:
                        new = [e for e in edges if e not in removed]
                        new += [frozenset((t2, t3)), frozenset((t4, t1))]
                        if _is_hamiltonian(new, n):
                            return (t1, t2, t3, t4)
                    g2b = g1 + cost[t3][t4]
                    for t5 in neighbors[t4]:
                        t5 = int(t5)
                        g2 = g2b - cost[t4][t5]
                        if g2 <= eps:
                            break
                        if t5 == t4:
                            continue
                        for t6 in tn(t5):
                            rem3 = removed + [frozenset((t5, t6))]
                            if len(set(rem3)) < 3:
                                continue
                            gain = g2 + cost[t5][t6] - cost[t6][t1]
                            if gain <= eps:
                                continue
                            new = [e for e in edges if e not in rem3]
                            new += [frozenset((t2, t3)), frozenset((t4, t5)),
                                    frozenset((t6, t1))]
                            if _is_hamiltonian(new, n):
                                return (t1, t2, t3, t4, t5, t6)
    return None


def bond_distance(a, b) -> int:
    """Edges of tour a missing from tour b."""
    return len(_edge_set(a) - _edge_set(b))


def riemann_area(x, y, steps_per_piece: int = 20000) -> float:
    """Midpoint-rectangle integral of the piecewise-linear curve through (x, y)."""
    total = 0.0
    for k in range(len(x) - 1):
        h = (x[k + 1] - x[k]) / steps_per_piece
        for s in range(steps_per_piece):
            t = (s + 0.5) / steps_per_piece
            total += h * (y[k] + t * (y[k + 1] - y[k]))
    return total
