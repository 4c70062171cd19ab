"""Compiled search core: 3-Opt descent, double bridge, iteration loop.

A tour lives in two arrays, ``tour`` (position -> city) and ``pos``
(city -> position). Moves are applied as sequences of path reversals, each
reversing whichever side of the cycle is shorter.

The hot loops read two dense tables: ``G``, the model cost of every edge,
and ``D``, the original cost (used to track the best tour under f_o when the
model differs). The model itself travels as the 11-tuple produced by
``CostModel.kernel_args`` and is only touched to refill ``G`` and to
evaluate whole tours.

Evaluation accounting: every model edge-cost lookup made by a descent or a
perturbation is one "lookup"; ``lookups / n`` is the number of full-tour
equivalent evaluations. Bookkeeping lookups (tracking f_o while descending
another model, recomputing g for traces) are not counted.
"""

import time

import numpy as np
from numba import njit, objmode

from ._costs import MODE_HC, MODE_ORIGINAL, model_cost, order_cost

EPS = 1e-9

# istate slots
LOOKUPS = 0
ITERS = 1
MOVES = 2
PERTURBS = 3
HIST_LEN = 4
TRACE_LEN = 5
LAST_IMPROVE = 6
BEST_CHANGED = 7
HIST_DIRTY = 8
HAS_PREV = 9
N_ISTATE = 10

# fstate slots
CUR_FO = 0
BEST_FO = 1
CUR_MODEL = 2
N_FSTATE = 3

# run() exit codes
STATUS_BUDGET = 0
STATUS_ITERS = 1
STATUS_FULL = 2
STATUS_TARGET = 3
STATUS_TIME = 4


@njit(cache=True)
def fill_neighbor_costs(NC, G, nbr):
    """NC[i, a] = G[i, nbr[i, a]]: costs along the candidate lists."""
    for i in range(nbr.shape[0]):
        for a in range(nbr.shape[1]):
            NC[i, a] = G[i, nbr[i, a]]


@njit(cache=True)
def fill_model(G, M):
    """Tabulate the model cost of every edge into ``G``."""
    mode, dmat, pts, ckind, rank, chord, lam, cmin, crange, cbar, expo = M
    n = G.shape[0]
    for i in range(n):
        G[i, i] = 0.0
        for j in range(i + 1, n):
            v = model_cost(i, j, mode, dmat, pts, ckind, rank, chord, lam, cmin, crange,
                           cbar, expo)
            G[i, j] = v
            G[j, i] = v


@njit(cache=True)
def _step(tour, pos, n, x, d):
    """Neighbor of x in direction d (0 = successor, 1 = predecessor)."""
    p = pos[x]
    if d == 0:
        p += 1
        if p == n:
            p = 0
    else:
        p -= 1
        if p < 0:
            p = n - 1
    return tour[p]


@njit(cache=True)
def _opos(pos, n, p1, x, d):
    """Position of x counted from position p1 in direction d."""
    if d == 0:
        r = pos[x] - p1
    else:
        r = p1 - pos[x]
    if r < 0:
        r += n
    return r


@njit(cache=True)
def _reverse(tour, pos, n, i, j):
    """Reverse the cyclic run of positions i..j (or, if shorter, its complement)."""
    length = j - i
    if length < 0:
        length += n
    length += 1
    if 2 * length > n:
        i, j = j + 1, i - 1
        if i == n:
            i = 0
        if j < 0:
            j = n - 1
        length = n - length
    for _ in range(length // 2):
        a = tour[i]
        b = tour[j]
        tour[i] = b
        pos[b] = i
        tour[j] = a
        pos[a] = j
        i += 1
        if i == n:
            i = 0
        j -= 1
        if j < 0:
            j = n - 1


@njit(cache=True)
def _move2(tour, pos, n, a, b, c, d):
    """Replace edges (a, b), (c, d) by (a, c), (b, d).

    Requires b to follow a and d to follow c in one common direction.
    """
    p = pos[a] + 1
    if p == n:
        p = 0
    if tour[p] == b:
        _reverse(tour, pos, n, pos[b], pos[c])
    else:
        _reverse(tour, pos, n, pos[c], pos[b])


@njit(cache=True)
def _push(city, queue, inq, qs, n):
    if not inq[city]:
        inq[city] = True
        tail = qs[0] + qs[1]
        if tail >= n:
            tail -= n
        queue[tail] = city
        qs[1] += 1


@njit(cache=True)
def _push_all(queue, inq, qs, n):
    for c in range(n):
        _push(c, queue, inq, qs, n)


@njit(cache=True)
def _after_move(tour, best_tour, fstate, istate, gain, dfo):
    fstate[CUR_MODEL] -= gain
    fstate[CUR_FO] += dfo
    if fstate[CUR_FO] < fstate[BEST_FO] - EPS:
        fstate[BEST_FO] = fstate[CUR_FO]
        best_tour[:] = tour
        istate[LAST_IMPROVE] = istate[LOOKUPS]
        istate[BEST_CHANGED] = 1
        istate[HIST_DIRTY] = 1


@njit(cache=True)
def _improve_city(t1, tour, pos, nbr, NC, G, D, track, queue, inq, qs, best_tour, fstate, istate):
    """Apply the first improving candidate 2-/3-Opt move around t1.

    Returns True if a move was applied.
    """
    n = tour.shape[0]
    k = nbr.shape[1]
    look = 0
    for d in range(2):
        p1 = pos[t1]
        t2 = _step(tour, pos, n, t1, d)
        c12 = G[t1, t2]
        look += 1
        for a in range(k):
            t3 = nbr[t2, a]
            c23 = NC[t2, a]
            look += 1
            g1 = c12 - c23
            if g1 <= EPS:
                break
            p3 = _opos(pos, n, p1, t3, d)
            if p3 < 3:
                continue
            # t4 before t3: 2-opt close, or a 3-opt with t5 outside t2..t4
            t4 = _step(tour, pos, n, t3, 1 - d)
            p4 = p3 - 1
            c34 = G[t3, t4]
            c41 = G[t4, t1]
            look += 2
            g2b = g1 + c34
            gain = g2b - c41
            if gain > EPS:
                dfo = -gain
                if track:
                    dfo = (D[t2, t3] + D[t4, t1]) - (D[t1, t2] + D[t3, t4])
                _move2(tour, pos, n, t1, t2, t4, t3)
                istate[LOOKUPS] += look
                _after_move(tour, best_tour, fstate, istate, gain, dfo)
                _push(t2, queue, inq, qs, n)
                _push(t3, queue, inq, qs, n)
                _push(t4, queue, inq, qs, n)
                return True
            for b in range(k):
                t5 = nbr[t4, b]
                c45 = NC[t4, b]
                look += 1
                g2 = g2b - c45
                if g2 <= EPS:
                    break
                p5 = _opos(pos, n, p1, t5, d)
                if p5 > p3:
                    t6 = _step(tour, pos, n, t5, 1 - d)
                elif p5 >= 1 and p5 < p4:
                    t6 = _step(tour, pos, n, t5, d)
                else:
                    continue
                c56 = G[t5, t6]
                c61 = G[t6, t1]
                look += 2
                gain = g2 + c56 - c61
                if gain > EPS:
                    dfo = -gain
                    if track:
                        dfo = (D[t2, t3] + D[t4, t5] + D[t6, t1]) - (
                            D[t1, t2] + D[t3, t4] + D[t5, t6])
                    _move2(tour, pos, n, t1, t2, t4, t3)
                    _move2(tour, pos, n, t1, t4, t6, t5)
                    istate[LOOKUPS] += look
                    _after_move(tour, best_tour, fstate, istate, gain, dfo)
                    _push(t2, queue, inq, qs, n)
                    _push(t3, queue, inq, qs, n)
                    _push(t4, queue, inq, qs, n)
                    _push(t5, queue, inq, qs, n)
                    _push(t6, queue, inq, qs, n)
                    return True
            # t4 after t3: only 3-opt closes, t5 strictly between t2 and t3
            if p3 > n - 2:
                continue
            t4 = _step(tour, pos, n, t3, d)
            c34 = G[t3, t4]
            look += 1
            g2b = g1 + c34
            for b in range(k):
                t5 = nbr[t4, b]
                c45 = NC[t4, b]
                look += 1
                g2 = g2b - c45
                if g2 <= EPS:
                    break
                p5 = _opos(pos, n, p1, t5, d)
                if p5 < 1 or p5 > p3 - 1:
                    continue
                for side in range(2):
                    if side == 0:
                        t6 = _step(tour, pos, n, t5, d)
                    else:
                        if p5 < 2:
                            break
                        t6 = _step(tour, pos, n, t5, 1 - d)
                    c56 = G[t5, t6]
                    c61 = G[t6, t1]
                    look += 2
                    gain = g2 + c56 - c61
                    if gain > EPS:
                        dfo = -gain
                        if track:
                            dfo = (D[t2, t3] + D[t4, t5] + D[t6, t1]) - (
                                D[t1, t2] + D[t3, t4] + D[t5, t6])
                        if side == 0:
                            # segment exchange without reversal
                            _move2(tour, pos, n, t1, t2, t3, t4)
                            _move2(tour, pos, n, t1, t3, t6, t5)
                            _move2(tour, pos, n, t3, t5, t2, t4)
                        else:
                            _move2(tour, pos, n, t1, t2, t6, t5)
                            _move2(tour, pos, n, t2, t5, t3, t4)
                        istate[LOOKUPS] += look
                        _after_move(tour, best_tour, fstate, istate, gain, dfo)
                        _push(t2, queue, inq, qs, n)
                        _push(t3, queue, inq, qs, n)
                        _push(t4, queue, inq, qs, n)
                        _push(t5, queue, inq, qs, n)
                        _push(t6, queue, inq, qs, n)
                        return True
    istate[LOOKUPS] += look
    return False


@njit(cache=True)
def descend(tour, pos, nbr, NC, G, D, track, queue, inq, qs, best_tour, fstate, istate):
    """Process the active-city queue until empty; return moves applied."""
    n = tour.shape[0]
    moves = 0
    while qs[1] > 0:
        t1 = queue[qs[0]]
        qs[0] += 1
        if qs[0] == n:
            qs[0] = 0
        qs[1] -= 1
        inq[t1] = False
        while _improve_city(t1, tour, pos, nbr, NC, G, D, track, queue, inq, qs, best_tour, fstate, istate):
            moves += 1
    istate[MOVES] += moves
    return moves


@njit(cache=True)
def descend_exact(tour, pos, nbr, NC, G, D, track, queue, inq, qs, best_tour, fstate, istate):
    """Descend with every city active, repeating until a full sweep finds
    nothing: the result admits no improving candidate move at any city."""
    n = tour.shape[0]
    total = 0
    while True:
        _push_all(queue, inq, qs, n)
        moves = descend(tour, pos, nbr, NC, G, D, track, queue, inq, qs, best_tour, fstate,
                        istate)
        total += moves
        if moves == 0:
            return total


@njit(cache=True)
def double_bridge_inplace(tour, pos, rng, buf):
    """Exchange two non-adjacent segments: A B C D -> A D C B.

    Cut points 1 <= p1 < p2 < p3 < n are uniform over triples in which no
    two cyclically adjacent segments are both single cities, and the cut
    frame is rotated by a uniform offset, so exactly four edges change.
    Returns the segment end cities (a0, a1, b0, b1, c0, c1, d0, d1).
    """
    n = tour.shape[0]
    while True:
        x = rng.integers(1, n)
        y = rng.integers(1, n)
        z = rng.integers(1, n)
        if x == y or y == z or x == z:
            continue
        p1 = min(x, min(y, z))
        p3 = max(x, max(y, z))
        p2 = x + y + z - p1 - p3
        la = p1
        lb = p2 - p1
        lc = p3 - p2
        ld = n - p3
        if (la == 1 and lb == 1) or (lb == 1 and lc == 1) or \
                (lc == 1 and ld == 1) or (ld == 1 and la == 1):
            continue
        break
    r = rng.integers(0, n)
    for q in range(n):
        src = r + q
        if src >= n:
            src -= n
        buf[q] = tour[src]
    a0 = buf[0]
    a1 = buf[p1 - 1]
    b0 = buf[p1]
    b1 = buf[p2 - 1]
    c0 = buf[p2]
    c1 = buf[p3 - 1]
    d0 = buf[p3]
    d1 = buf[n - 1]
    w = 0
    for q in range(0, p1):
        tour[w] = buf[q]
        w += 1
    for q in range(p3, n):
        tour[w] = buf[q]
        w += 1
    for q in range(p2, p3):
        tour[w] = buf[q]
        w += 1
    for q in range(p1, p2):
        tour[w] = buf[q]
        w += 1
    for q in range(n):
        pos[tour[q]] = q
    return a0, a1, b0, b1, c0, c1, d0, d1


@njit(cache=True)
def _perturb(tour, pos, rng, buf, G, D, track, queue, inq, qs, best_tour, fstate, istate):
    n = tour.shape[0]
    a0, a1, b0, b1, c0, c1, d0, d1 = double_bridge_inplace(tour, pos, rng, buf)
    removed = G[a1, b0] + G[b1, c0] + G[c1, d0] + G[d1, a0]
    added = G[a1, d0] + G[d1, c0] + G[c1, b0] + G[b1, a0]
    istate[LOOKUPS] += 8
    if not track:
        dfo = added - removed
    else:
        dfo = (D[a1, d0] + D[d1, c0] + D[c1, b0] + D[b1, a0]) - (
            D[a1, b0] + D[b1, c0] + D[c1, d0] + D[d1, a0])
    _after_move(tour, best_tour, fstate, istate, removed - added, dfo)
    istate[PERTURBS] += 1
    _push(a0, queue, inq, qs, n)
    _push(a1, queue, inq, qs, n)
    _push(b0, queue, inq, qs, n)
    _push(b1, queue, inq, qs, n)
    _push(c0, queue, inq, qs, n)
    _push(c1, queue, inq, qs, n)
    _push(d0, queue, inq, qs, n)
    _push(d1, queue, inq, qs, n)


@njit(cache=True)
def tour_dist_pos(tour, other_pos):
    """Edges of ``tour`` that are not edges of the tour with positions ``other_pos``."""
    n = tour.shape[0]
    common = 0
    prev = tour[n - 1]
    for p in range(n):
        cur = tour[p]
        d = other_pos[prev] - other_pos[cur]
        if d < 0:
            d = -d
        if d == 1 or d == n - 1:
            common += 1
        prev = cur
    return n - common


@njit(cache=True)
def _now():
    with objmode(t="float64"):
        t = time.perf_counter()
    return t


@njit(cache=True)
def _record(tour, pos, M, moves, perturbed, fstate, istate, trace, work, keep_tours, t0):
    tr_fo, tr_model, tr_moves, tr_dprev, tr_dref, tr_lookups, tr_time, tr_pert, tr_tours = trace
    prev_tour, prev_pos, ref_pos = work
    idx = istate[TRACE_LEN]
    tr_fo[idx] = fstate[CUR_FO]
    tr_model[idx] = order_cost(tour, M[0], M[1], M[2], M[3], M[4], M[5], M[6], M[7],
                               M[8], M[9], M[10])
    tr_moves[idx] = moves
    if istate[HAS_PREV] == 1:
        tr_dprev[idx] = tour_dist_pos(tour, prev_pos)
    else:
        tr_dprev[idx] = -1
    if ref_pos.shape[0] > 0:
        tr_dref[idx] = tour_dist_pos(tour, ref_pos)
    else:
        tr_dref[idx] = -1
    tr_lookups[idx] = istate[LOOKUPS]
    tr_time[idx] = _now() - t0
    tr_pert[idx] = perturbed
    if keep_tours:
        tr_tours[idx, :] = tour
    prev_tour[:] = tour
    prev_pos[:] = pos
    istate[HAS_PREV] = 1
    istate[TRACE_LEN] = idx + 1


@njit(cache=True)
def _rebuild_rank(best_tour, rank):
    for p in range(best_tour.shape[0]):
        rank[best_tour[p]] = p


@njit(cache=True)
def run(tour, pos, best_tour, nbr, NC, G, D, M, rng, strength, fstate, istate,
        init_descent, full_reset, refresh_hull, stop_lookups, max_iters,
        target_model, target_fo, deadline, hist_lookups, hist_cost, hist_time,
        trace_on, keep_tours, trace, work, queue, inq, qs, buf, t0):
    """Run descents and perturbation iterations until a stop condition.

    ``init_descent``: first descend from the current tour with every city
    active (no perturbation). Then iterate {perturb ``strength`` times,
    descend} while ``lookups < stop_lookups`` and fewer than ``max_iters``
    iterations were made by this call. With ``refresh_hull`` and an HC model,
    the hull ranks are rebuilt from ``best_tour`` before an iteration whenever
    the best tour changed. The loop also stops on full history/trace
    buffers (resumable), when the current model value reaches
    ``target_model`` or the best original cost reaches ``target_fo``, or on
    passing the ``deadline`` (perf_counter seconds).
    """
    n = tour.shape[0]
    mode = M[0]
    lam = M[6]
    rank = M[4]
    track = mode != MODE_ORIGINAL
    check_time = deadline < np.inf
    if init_descent:
        _push_all(queue, inq, qs, n)
        moves = descend(tour, pos, nbr, NC, G, D, track, queue, inq, qs, best_tour, fstate, istate)
        if trace_on:
            _record(tour, pos, M, moves, False, fstate, istate, trace, work, keep_tours, t0)
        if istate[HIST_DIRTY] == 1:
            h = istate[HIST_LEN]
            hist_lookups[h] = istate[LAST_IMPROVE]
            hist_cost[h] = fstate[BEST_FO]
            hist_time[h] = _now() - t0
            istate[HIST_LEN] = h + 1
            istate[HIST_DIRTY] = 0
        if fstate[CUR_MODEL] <= target_model or fstate[BEST_FO] <= target_fo:
            return STATUS_TARGET
    iters = 0
    reset_pending = full_reset
    while istate[LOOKUPS] < stop_lookups:
        if iters >= max_iters:
            return STATUS_ITERS
        if istate[HIST_LEN] >= hist_lookups.shape[0] or \
                (trace_on and istate[TRACE_LEN] >= trace[0].shape[0]):
            return STATUS_FULL
        if check_time and _now() >= deadline:
            return STATUS_TIME
        if mode == MODE_HC and refresh_hull and istate[BEST_CHANGED] == 1:
            _rebuild_rank(best_tour, rank)
            istate[BEST_CHANGED] = 0
            if lam > 0.0:
                # with lam = 0 the table does not depend on the ranks
                fill_model(G, M)
                fill_neighbor_costs(NC, G, nbr)
                fstate[CUR_MODEL] = order_cost(tour, M[0], M[1], M[2], M[3], M[4], M[5],
                                               M[6], M[7], M[8], M[9], M[10])
                reset_pending = True
        for _ in range(strength):
            _perturb(tour, pos, rng, buf, G, D, track, queue, inq, qs, best_tour, fstate, istate)
        if reset_pending:
            _push_all(queue, inq, qs, n)
            reset_pending = False
        moves = descend(tour, pos, nbr, NC, G, D, track, queue, inq, qs, best_tour, fstate, istate)
        iters += 1
        istate[ITERS] += 1
        if trace_on:
            _record(tour, pos, M, moves, True, fstate, istate, trace, work, keep_tours, t0)
        if istate[HIST_DIRTY] == 1:
            h = istate[HIST_LEN]
            hist_lookups[h] = istate[LAST_IMPROVE]
            hist_cost[h] = fstate[BEST_FO]
            hist_time[h] = _now() - t0
            istate[HIST_LEN] = h + 1
            istate[HIST_DIRTY] = 0
        if fstate[CUR_MODEL] <= target_model or fstate[BEST_FO] <= target_fo:
            return STATUS_TARGET
    return STATUS_BUDGET
