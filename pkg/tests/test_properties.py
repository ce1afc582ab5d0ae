import json
import math

import numpy as np
from hypothesis import assume, given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from _oracles import dominates as dominates_oracle
from _oracles import is_simple_bruteforce, point_in_ring
from polydesign.domain import Domain, postprocess, validate
from polydesign.errors import RepairFailed
from polydesign.estimators import road_cost
from polydesign.geometry import (
    Kind,
    Polygon,
    Structure,
    chamfer_distance,
    is_simple,
    points_in_polygon,
    polygon_length,
    rotate_polygon,
)
from polydesign.io import dumps_record, structure_from_json, structure_to_json
from polydesign.optimizers import dominates, fitness_terms, hypervolume_2d, pareto_front

coord = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
small_int = st.integers(0, 6)


def objective_sets(m=2, max_size=25, elements=small_int):
    return st.integers(1, max_size).flatmap(
        lambda n: arrays(np.float64, (n, m), elements=elements)
    )


def polygons(min_n=3, max_n=8, kind=Kind.CLOSED):
    return st.integers(min_n, max_n).flatmap(
        lambda n: arrays(np.float64, (n, 2), elements=coord).map(lambda a: Polygon(a, kind))
    )


def star_polygon():
    """Simple polygon: random radii at sorted distinct angles."""
    return st.lists(st.tuples(st.floats(0, 2 * math.pi - 1e-3), st.floats(1, 20)),
                    min_size=3, max_size=10, unique_by=lambda t: round(t[0], 3)).map(
        lambda ts: Polygon([(r * math.cos(a), r * math.sin(a)) for a, r in sorted(ts)]))


# --- dominance and fronts -------------------------------------------------


@given(objective_sets(m=3))
def test_dominance_matches_oracle_and_is_strict_order(y):
    for a in y:
        assert not dominates(a, a)
        for b in y:
            assert dominates(a, b) == dominates_oracle(a, b)
            assert not (dominates(a, b) and dominates(b, a))


@given(objective_sets())
def test_front_is_exactly_the_undominated_set(y):
    front = set(pareto_front(y))
    for i in range(len(y)):
        dominated = any(dominates(y[j], y[i]) for j in range(len(y)))
        assert (i in front) != dominated


@given(objective_sets(elements=st.floats(0, 10)), objective_sets(elements=st.floats(0, 10)))
def test_hypervolume_monotone_under_union(a, b):
    ref = (11.0, 11.0)
    both = np.vstack([a, b])
    hv = hypervolume_2d(both, ref)
    assert hv >= hypervolume_2d(a, ref) - 1e-9
    assert hv <= 121.0 + 1e-9
    assert math.isclose(hv, hypervolume_2d(both[pareto_front(both)], ref), abs_tol=1e-9)


@given(objective_sets(elements=st.floats(0, 10)), st.integers(1, 6))
def test_spea2_fitness_bands(y, k):
    t = fitness_terms(y, k)
    assert np.all((t.density > 0) & (t.density <= 0.5))
    front = set(pareto_front(y))
    for i, f in enumerate(t.fitness):
        assert (f < 1) == (i in front)


# --- geometry -------------------------------------------------------------


@given(polygons(), st.floats(-360, 360))
def test_rotation_is_isometry_and_invertible(p, angle):
    r = rotate_polygon(p, angle)
    assert math.isclose(polygon_length(r), polygon_length(p), rel_tol=1e-9, abs_tol=1e-9)
    back = rotate_polygon(r, -angle)
    assert np.allclose(back.points, p.points, atol=1e-8)


@given(polygons(2, 7, Kind.OPEN))
def test_is_simple_matches_oracle_on_open(p):
    assert is_simple(p) == is_simple_bruteforce(p.points, False)


@given(star_polygon(), arrays(np.float64, (20, 2), elements=st.floats(-25, 25)))
def test_containment_matches_winding_oracle(p, pts):
    got = points_in_polygon(pts, p)
    ring = [tuple(v) for v in p.points]
    for q, g in zip(pts, got):
        assert g == point_in_ring(tuple(q), ring)


@given(polygons(), polygons(2, 5, Kind.OPEN))
def test_chamfer_metric_properties(p, q):
    assume(polygon_length(p) > 1e-6 and polygon_length(q) > 1e-6)
    a, b = Structure([p]), Structure([q])
    assert chamfer_distance(a, a) == 0.0
    dab = chamfer_distance(a, b, 64)
    assert dab >= 0 and abs(dab - chamfer_distance(b, a, 64)) <= 1e-12


@given(arrays(np.float64, st.tuples(st.integers(2, 6), st.just(2)), elements=coord),
       arrays(np.float64, st.tuples(st.integers(0, 5), st.just(2)), elements=coord))
def test_road_cost_at_least_straight_line(road, wells):
    cost = road_cost(road, wells, 1.0)
    assert cost >= math.dist(road[0], road[-1]) - 1e-9


@given(st.lists(polygons(), min_size=1, max_size=3))
def test_json_round_trip_exact(polys):
    s = Structure(polys)
    assert structure_from_json(json.loads(dumps_record(structure_to_json(s)))) == s


# --- repair ---------------------------------------------------------------

FIELD = Domain.rectangle(100, 100, prohibited=[Polygon([(40, 40), (55, 42), (50, 58)])],
                         max_points=8, max_polygons=3)


@given(st.lists(polygons(3, 10), min_size=0, max_size=4), st.integers(0, 2**32 - 1))
def test_repair_closes_or_declares_failure(polys, seed):
    shifted = [Polygon(p.points + 50, p.kind) for p in polys]
    rng = np.random.default_rng(seed)
    try:
        out = postprocess(Structure(shifted), FIELD, rng)
    except RepairFailed:
        return
    assert validate(out, FIELD).valid
    assert postprocess(out, FIELD, rng) is out
