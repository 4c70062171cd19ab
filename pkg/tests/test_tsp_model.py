import io
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hctsp import tsp_model as tm
from hctsp.tsp_model import (KNOWN_OPTIMA, Tour, TspInstance, TsplibError, parse_tsplib,
                             tour_cost, tour_distance)

import oracles as O

GOLDEN = {"eil51": 426, "berlin52": 7542, "st70": 675, "pr76": 108159, "rat99": 1211,
          "gr96": 55209}

SMALL_EUC = """NAME: tiny
TYPE: TSP
COMMENT: hand example
DIMENSION: 4
EDGE_WEIGHT_TYPE: EUC_2D
NODE_COORD_SECTION
1 0 0
2 3 0
3 3 4
4 0 4
EOF
"""


@pytest.mark.parametrize("name", sorted(GOLDEN))
def test_golden_costs(name):
    inst = tm.load_bundled(name)
    tour = tm.bundled_optimal_tour(name, inst)
    assert tour.cost == GOLDEN[name]
    assert KNOWN_OPTIMA[name] == GOLDEN[name]


def test_euc2d_matches_plain_rounding():
    inst = tm.load_bundled("eil51")
    ref = O.euc2d(inst.coords)
    np.testing.assert_array_equal(inst.cost_matrix(), ref)


def test_small_file_parses():
    inst = parse_tsplib(SMALL_EUC)
    assert inst.n == 4 and inst.name == "tiny"
    assert tour_cost(inst, [0, 1, 2, 3]) == 14
    assert tour_cost(inst, [0, 2, 1, 3]) == 5 + 4 + 5 + 4


def test_geo_hand_value():
    # two points one degree of latitude apart on the same meridian
    text = ("NAME: g\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: GEO\nNODE_COORD_SECTION\n"
            "1 10.00 20.00\n2 11.00 20.00\n3 10.00 21.00\nEOF\n")
    inst = parse_tsplib(text)
    pi = 3.141592
    lat1, lat2 = 10 * pi / 180, 11 * pi / 180
    q1, q2, q3 = 1.0, math.cos(lat1 - lat2), math.cos(lat1 + lat2)
    expected = int(6378.388 * math.acos(0.5 * ((1 + q1) * q2 - (1 - q1) * q3)) + 1.0)
    assert inst.cost_matrix()[0, 1] == expected == 112


def _explicit(fmt, body, n=4):
    return (f"NAME: x\nTYPE: TSP\nDIMENSION: {n}\nEDGE_WEIGHT_TYPE: EXPLICIT\n"
            f"EDGE_WEIGHT_FORMAT: {fmt}\nEDGE_WEIGHT_SECTION\n{body}\nEOF\n")


FULL = np.array([[0, 1, 2, 3], [1, 0, 4, 5], [2, 4, 0, 6], [3, 5, 6, 0]], dtype=float)


@pytest.mark.parametrize("fmt,body", [
    ("FULL_MATRIX", "0 1 2 3\n1 0 4 5\n2 4 0 6\n3 5 6 0"),
    ("UPPER_ROW", "1 2 3\n4 5\n6"),
    ("LOWER_DIAG_ROW", "0\n1 0\n2 4 0\n3 5 6 0"),
    ("UPPER_DIAG_ROW", "0 1 2 3\n0 4 5\n0 6\n0"),
])
def test_explicit_formats(fmt, body):
    inst = parse_tsplib(_explicit(fmt, body))
    np.testing.assert_array_equal(inst.cost_matrix(), FULL)


@pytest.mark.parametrize("text,fragment", [
    (SMALL_EUC.replace("TYPE: TSP", "TYPE: ATSP"), "TYPE"),
    (SMALL_EUC.replace("EUC_2D", "ATT"), "EDGE_WEIGHT_TYPE"),
    (SMALL_EUC.replace("4 0 4\n", ""), "expected 'index x y'"),
    (SMALL_EUC.replace("3 3 4", "3 3 x"), "non-numeric"),
    (SMALL_EUC.replace("DIMENSION: 4\n", ""), "DIMENSION"),
    (_explicit("UPPER_ROW", "1 2 3\n4 5"), "entries"),
])
def test_parse_errors(text, fragment):
    with pytest.raises(TsplibError, match=fragment) as info:
        parse_tsplib(text)
    assert "line" in str(info.value)


def test_tour_validation():
    inst = parse_tsplib(SMALL_EUC)
    with pytest.raises(ValueError):
        Tour.from_order(inst, [0, 1, 1, 3])
    with pytest.raises(ValueError):
        Tour.from_order(inst, [0, 1, 2])


def test_tour_file_round_trip(tmp_path):
    inst = tm.load_bundled("eil51")
    t = tm.bundled_optimal_tour("eil51", inst)
    path = tmp_path / "a.tour"
    path.write_text(tm.format_tour(inst.name, t))
    back = tm.read_tour(path, inst)
    np.testing.assert_array_equal(back.order, t.order)
    assert back.cost == t.cost


def test_generator_round_trip():
    inst = tm.gen_random_euclidean(60, 3)
    back = parse_tsplib(tm.write_tsplib(inst))
    np.testing.assert_array_equal(back.coords, inst.coords)
    np.testing.assert_array_equal(back.cost_matrix(), inst.cost_matrix())
    assert "DIMENSION: 5000" in tm.write_tsplib(tm.gen_random_euclidean(5000, 0))


def test_generator_seeds_differ():
    a = tm.gen_random_euclidean(20, 1)
    b = tm.gen_random_euclidean(20, 2)
    assert not np.array_equal(a.coords, b.coords)
    np.testing.assert_array_equal(a.coords, tm.gen_random_euclidean(20, 1).coords)


def test_neighbor_lists_sorted_and_exclude_self():
    inst = tm.load_bundled("berlin52")
    nb = tm.nearest_neighbor_lists(inst, 8)
    d = inst.cost_matrix()
    for i in range(inst.n):
        row = nb[i]
        assert i not in row
        assert np.all(np.diff(d[i, row]) >= 0)
        others = np.delete(d[i], i)
        assert d[i, row[-1]] <= np.sort(others)[8 - 1]


def test_load_instance_specs():
    assert tm.load_instance("rand:30:4").n == 30
    assert tm.load_instance("st70").n == 70
    with pytest.raises(FileNotFoundError):
        tm.load_instance("no_such_instance")


@settings(max_examples=60, deadline=None)
@given(n=st.integers(4, 40), seed=st.integers(0, 10_000))
def test_distance_properties(n, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.permutation(n), rng.permutation(n)
    assert tour_distance(a, a) == 0
    assert tour_distance(a, np.roll(a, 3)) == 0
    assert tour_distance(a, a[::-1]) == 0
    assert tour_distance(a, b) == tour_distance(b, a) == O.bond_distance(a, b)
    assert 0 <= tour_distance(a, b) <= n


@settings(max_examples=40, deadline=None)
@given(n=st.integers(3, 30), seed=st.integers(0, 10_000))
def test_tour_cost_matches_oracle(n, seed):
    inst = tm.gen_random_euclidean(n, seed, side=1000)
    order = np.random.default_rng(seed).permutation(n)
    assert tour_cost(inst, order) == O.cycle_cost(order, O.euc2d(inst.coords))


def test_write_rejects_explicit():
    inst = parse_tsplib(_explicit("UPPER_ROW", "1 2 3\n4 5\n6"))
    with pytest.raises(ValueError):
        tm.write_tsplib(inst, io.StringIO())
    assert isinstance(inst, TspInstance)


TRIANGLE = ("NAME: tri\nTYPE: TSP\nDIMENSION: 3\nEDGE_WEIGHT_TYPE: EUC_2D\n"
            "NODE_COORD_SECTION\n1 0 0\n2 3 0\n3 0 4\nEOF\n")


def test_triangle_costs_and_k1():
    inst = parse_tsplib(TRIANGLE)
    d = inst.cost_matrix()
    assert sorted({d[0, 1], d[0, 2], d[1, 2]}) == [3, 4, 5]
    assert tm.edge_cost(inst, 1, 1) == 0
    assert list(tm.nearest_neighbor_lists(inst, 1)[0]) == [1]


def test_unit_square_tour():
    text = SMALL_EUC.replace("2 3 0", "2 1 0").replace("3 3 4", "3 1 1").replace("4 0 4", "4 0 1")
    inst = parse_tsplib(text)
    assert tm.edge_cost(inst, 0, 1) == 1
    assert tour_cost(inst, [0, 1, 2, 3]) == 4
    assert tour_cost(inst, [2, 3, 0, 1]) == 4


@pytest.mark.parametrize("k", [20, 50])
def test_neighbor_lists_full_row_sort_oracle(k):
    inst = tm.load_bundled("eil51")
    nb = tm.nearest_neighbor_lists(inst, k)
    d = O.euc2d(inst.coords)
    for i in range(inst.n):
        ranked = sorted((j for j in range(inst.n) if j != i), key=lambda j: (d[i][j], j))
        assert list(nb[i]) == ranked[:k]


def test_generated_costs_bounded():
    side = 1000.0
    inst = tm.gen_random_euclidean(200, 9, side=side)
    d = inst.cost_matrix()
    assert d.min() >= 0
    assert d.max() <= round(side * math.sqrt(2))
