import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from hctsp import tsp_model as tm
from hctsp.landscape import (DegenerateInputError, LandscapeReport, analyze_transform, auc,
                             escaping_rate, excess, fdc, fdc_pairs, local_optimum_density,
                             mean_excess_curve, rank_test_less, reports_to_csv)
from hctsp.search import SearchParams, ils
from hctsp.trace import SearchTrace

import oracles as O


def _trace(moves, perturbed, dist_prev=None):
    m = len(moves)
    dist_prev = np.full(m, -1) if dist_prev is None else np.asarray(dist_prev)
    z = np.zeros(m)
    return SearchTrace(10, z, z, np.asarray(moves, dtype=np.int64), dist_prev,
                       np.full(m, -1), np.zeros(m, dtype=np.int64), z,
                       np.asarray(perturbed, dtype=bool))


# --------------------------------------------------------------------------
# density and escaping rate

def test_density_hand_values():
    assert local_optimum_density(_trace([100] * 5, [False] * 5)) == 1.0
    assert local_optimum_density(_trace([20], [False])) == 5.0
    # kicks count as moves: 2 optima, 9 + 1 + 10 moves
    assert local_optimum_density(_trace([9, 10], [False, True])) == 10.0


def test_density_errors_and_dedup():
    with pytest.raises(ValueError):
        local_optimum_density(_trace([], []))
    t = _trace([5, 5], [False, True])
    with pytest.raises(ValueError):
        local_optimum_density(t, dedup=True)
    t.tours = np.array([np.arange(10), np.roll(np.arange(10), 2)])
    assert local_optimum_density(t, dedup=True) == pytest.approx(100 / 11)


def test_escaping_rate_hand_values():
    assert escaping_rate(_trace([3, 1, 1], [False, True, True], [-1, 0, 0])) == 0.0
    assert escaping_rate(_trace([3, 1, 1], [False, True, True], [-1, 4, 6])) == 1.0
    assert escaping_rate(_trace([3, 1, 1, 2], [False, True, True, True],
                                [-1, 4, 0, 5])) == pytest.approx(2 / 3)
    with pytest.raises(ValueError):
        escaping_rate(_trace([3], [False]))


# --------------------------------------------------------------------------
# fdc

def test_fdc_boundary_cases():
    d = np.array([0.0, 3, 4, 10, 12])
    assert fdc(2.5 * d + 7, d) == pytest.approx(1.0, abs=1e-12)
    assert fdc(-d, d) == pytest.approx(-1.0, abs=1e-12)
    c, dd = 100.0, 20.0
    pairs = [(c + delta, dd - delta) for delta in (1, 2, 5)] + \
            [(c - delta, dd + delta) for delta in (1, 2, 5)]
    assert fdc_pairs(pairs) == pytest.approx(-1.0, abs=1e-15)


def test_fdc_degenerate():
    with pytest.raises(DegenerateInputError):
        fdc([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])
    with pytest.raises(DegenerateInputError):
        fdc([1.0, 2.0], [4.0, 4.0])
    with pytest.raises(DegenerateInputError):
        fdc([1.0], [2.0])


@settings(max_examples=100, deadline=None)
@given(data=st.lists(st.tuples(st.floats(-1e3, 1e3), st.floats(0, 1e3)), min_size=3,
                     max_size=40),
       a=st.floats(0.01, 100), b=st.floats(-1e3, 1e3))
def test_fdc_affine_invariance(data, a, b):
    f = np.array([x for x, _ in data])
    d = np.array([y for _, y in data])
    assume(np.ptp(f) > 1e-3 and np.ptp(d) > 1e-3)
    r = fdc(f, d)
    assert -1.0 <= r <= 1.0
    assert fdc(a * f + b, d) == pytest.approx(r, abs=1e-9)
    assert fdc(f, a * d + b) == pytest.approx(r, abs=1e-9)


# --------------------------------------------------------------------------
# excess and auc

def test_excess_table_values():
    assert round(excess(428, 426), 4) == 0.4695
    assert round(excess(7902, 7542), 4) == 4.7733
    assert excess(5.5, 5.5) == 0.0
    with pytest.raises(ValueError):
        excess(10, 0)


def test_auc_simple_shapes():
    assert auc([0, 1], [2, 0]) == 1.0
    assert auc([3, 5, 9], [1.5, 1.5, 1.5]) == pytest.approx(1.5 * 6)


@pytest.mark.parametrize("x", [[0, 0, 1], [1, 0, 2], [0]])
def test_auc_rejects_bad_abscissas(x):
    with pytest.raises(ValueError):
        auc(x, np.zeros(len(x)))


def test_auc_vs_riemann_oracle():
    rng = np.random.default_rng(0)
    x = np.cumsum(rng.uniform(0.1, 2.0, 12))
    y = rng.uniform(0, 10, 12)
    assert auc(x, y) == pytest.approx(O.riemann_area(x, y), rel=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.floats(0.01, 10), st.floats(0, 100)), min_size=3, max_size=30),
       st.integers(1, 28), st.floats(0, 5))
def test_auc_additive_and_monotone(steps, cut, bump):
    x = np.cumsum([s for s, _ in steps])
    y = np.array([v for _, v in steps])
    cut = min(cut, len(x) - 2)
    whole = auc(x, y)
    parts = auc(x[:cut + 1], y[:cut + 1]) + auc(x[cut:], y[cut:])
    assert whole == pytest.approx(parts, rel=1e-12, abs=1e-9)
    assert auc(x, y + bump) >= whole - 1e-9


def test_mean_excess_curve_step_sampling():
    hist = [(np.array([0, 10, 20]), np.array([200.0, 150.0, 110.0])),
            (np.array([0, 15]), np.array([180.0, 100.0]))]
    curve = mean_excess_curve([5, 10, 15, 25], hist, 100.0)
    np.testing.assert_allclose(curve, [(100 + 80) / 2, (50 + 80) / 2, (50 + 0) / 2,
                                       (10 + 0) / 2])


def test_rank_test_direction():
    lo, hi = np.arange(20.0), np.arange(20.0) + 15
    assert rank_test_less(lo, hi) < 0.01
    assert rank_test_less(hi, lo) > 0.99
    assert rank_test_less(np.append(lo, np.nan), hi) == rank_test_less(lo, hi)


# --------------------------------------------------------------------------
# sweeps

@pytest.fixture(scope="module")
def eil51():
    return tm.load_bundled("eil51")


def test_analyze_report_count_and_bounds(eil51):
    opt = tm.bundled_optimal_tour("eil51", eil51)
    lams = [0.0, 0.03, 0.1]
    reps = analyze_transform(eil51, opt, lams, 5, SearchParams(seed=0, budget_evals=2e5),
                             fdc_samples=100)
    assert [r.lam for r in reps] == lams
    for r in reps:
        assert r.lo_density >= 0
        assert 0 <= r.escaping_rate <= 1
        assert -1 <= r.fdc <= 1
        assert r.sample_size == 100 and r.reference_proven
    text = reports_to_csv(reps)
    assert text.splitlines()[0] == ("instance,lambda,anchor_kind,runs,lo_density,"
                                    "escaping_rate,fdc,mean_runtime_s,censored")
    assert len(text.splitlines()) == 4


def test_lambda_zero_reproduces_plain_ils(eil51):
    opt = tm.bundled_optimal_tour("eil51", eil51)
    params = SearchParams(seed=7, budget_evals=2e5)
    (rep,) = analyze_transform(eil51, opt, [0.0], 6, params, fdc_samples=50)
    runs = [ils(eil51, SearchParams(seed=7 + r, budget_evals=2e5, trace=True, target_cost=426),
                reference=opt) for r in range(6)]
    expected = [local_optimum_density(r.trace) for r in runs]
    np.testing.assert_allclose(rep.run_density, expected, rtol=0, atol=0)
    pooled = 100 * sum(len(r.trace) for r in runs) / sum(r.trace.move_count for r in runs)
    assert rep.lo_density == pooled
    assert rep.censored == sum(r.status != "target" for r in runs)


def test_analyze_is_deterministic(eil51):
    opt = tm.bundled_optimal_tour("eil51", eil51)
    p = SearchParams(seed=3, budget_evals=1e5)
    a = analyze_transform(eil51, opt, [0.0, 0.05], 4, p, fdc_samples=80)
    b = analyze_transform(eil51, opt, [0.0, 0.05], 4, p, fdc_samples=80)
    for ra, rb in zip(a, b):
        assert (ra.lo_density, ra.escaping_rate, ra.fdc, ra.censored) == \
            (rb.lo_density, rb.escaping_rate, rb.fdc, rb.censored)


def test_local_anchor_is_flagged(eil51):
    anchor = ils(eil51, SearchParams(seed=1, budget_evals=1e-9)).best_tour
    (rep,) = analyze_transform(eil51, anchor, [0.05], 3, SearchParams(seed=0, budget_evals=2e4),
                               anchor_kind="local", fdc_samples=30)
    assert rep.anchor_kind == "local" and not rep.reference_proven


def test_analyze_validation(eil51):
    opt = tm.bundled_optimal_tour("eil51", eil51)
    with pytest.raises(ValueError):
        analyze_transform(eil51, opt, [1.2], 2, SearchParams(budget_evals=10))
    with pytest.raises(ValueError):
        analyze_transform(eil51, opt, [0.0], 0, SearchParams(budget_evals=10))


def test_report_rejects_out_of_range_values():
    common = dict(instance="x", lam=0.0, anchor_kind="global", runs=1, lo_density=1.0,
                  escaping_rate=0.5, fdc=0.1, mean_runtime=0.0, censored=0, sample_size=1,
                  reference_proven=True, run_density=np.zeros(1), run_escaping=np.zeros(1),
                  run_runtime=np.zeros(1))
    LandscapeReport(**common)
    for key, bad in (("escaping_rate", 1.5), ("fdc", -1.01), ("lo_density", -1.0)):
        with pytest.raises(ValueError):
            LandscapeReport(**{**common, key: bad})
    assert math.isnan(LandscapeReport(**{**common, "fdc": float("nan")}).fdc)


def test_escaping_rate_without_forced_final_episode():
    t = _trace([3, 1, 1, 2], [False, True, True, True], [-1, 0, 0, 5])
    assert escaping_rate(t) == pytest.approx(1 / 3)
    assert escaping_rate(t, drop_last=True) == 0.0
    with pytest.raises(ValueError):
        escaping_rate(_trace([3, 2], [False, True], [-1, 4]), drop_last=True)
