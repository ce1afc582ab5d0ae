import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest

from _oracles import ray_block_count, road_cost_dense
from conftest import square
from polydesign.domain import Domain
from polydesign.errors import EstimatorContractViolation
from polydesign.estimators import (
    CompositeEstimator,
    FunctionEstimator,
    ReferenceDistanceEstimator,
    RoadCostEstimator,
    RoadScenario,
    ShadowWaveEstimator,
    WaveScenario,
    blocking_counts,
    estimate_composite,
    estimate_reference_distance,
    road_cost,
    through_wells_baseline,
)
from polydesign.geometry import Kind, Polygon, Structure


class TestReferenceDistance:
    def test_identical_is_zero(self):
        d = Domain.rectangle(100, 100)
        ref = Structure([square(10, 10, 5)])
        assert estimate_reference_distance([ref], ref, d)[0, 0] == 0.0

    def test_shifted_square_frozen(self):
        d = Domain.rectangle(100, 100)
        got = estimate_reference_distance([Structure([square(10, 0)])], Structure([square()]), d)[0, 0]
        # chamfer oracle 9.5 over the 100x100 diagonal
        assert got == pytest.approx(9.5 / (100 * math.sqrt(2)), abs=1e-12)
        assert got == pytest.approx(0.06717514421272201, abs=1e-12)

    def test_non_negative_and_counted(self, rng):
        d = Domain.rectangle(100, 100)
        est = ReferenceDistanceEstimator(Structure([square(10, 10, 5)]), d)
        batch = [Structure([Polygon(rng.uniform(0, 100, (4, 2)))]) for _ in range(5)]
        assert np.all(est.estimate(batch) >= 0)
        assert est.call_counter == 5

    def test_empty_reference_rejected(self):
        with pytest.raises(ValueError):
            ReferenceDistanceEstimator(Structure([]), Domain.rectangle(1, 1))

    def test_executor_gives_same_values(self, rng):
        d = Domain.rectangle(100, 100)
        est = ReferenceDistanceEstimator(Structure([square(10, 10, 5)]), d)
        batch = [Structure([Polygon(rng.uniform(0, 100, (4, 2)))]) for _ in range(6)]
        with ThreadPoolExecutor(2) as pool:
            assert np.array_equal(est.estimate(batch, pool), est.estimate(batch))


class TestRoad:
    @pytest.fixture
    def setup(self):
        d = Domain.rectangle(20, 20, prohibited=[square(8, 8, 2)], min_points=2, max_points=8,
                             polygon_kind=Kind.OPEN, fixed_endpoints=((0.5, 5), (10.5, 5)))
        sc = RoadScenario([(3, 7), (6, 4), (8, 9)], d.fixed_endpoints, 1000.0)
        return d, sc

    def test_substitution(self):
        # length 10 with one well at distance 5
        assert road_cost([(0, 0), (10, 0)], [(5, 5)], 1000.0) == pytest.approx(15000.0)

    def test_wells_on_road(self):
        assert road_cost([(0, 0), (4, 0), (4, 3)], [(2, 0), (4, 1)], 1000.0) == pytest.approx(7000.0)

    def test_straight_road_dense_oracle(self):
        wells = [(3, 2), (6, -1), (8, 4)]
        got = road_cost([(0, 0), (10, 0)], wells, 1000.0)
        assert got == pytest.approx(17000.0, abs=1e-6)
        assert got == pytest.approx(road_cost_dense([(0, 0), (10, 0)], wells, 1000.0), abs=1e-2)

    def test_estimator_contract(self, setup):
        d, sc = setup
        est = RoadCostEstimator(sc, d)
        ok = Structure([Polygon([(0.5, 5), (5, 5), (10.5, 5)], Kind.OPEN)])
        assert est.estimate([ok])[0, 0] == pytest.approx(road_cost(ok[0].points, sc.wells, 1000.0))
        with pytest.raises(EstimatorContractViolation):
            est.estimate([Structure([Polygon([(1, 5), (10.5, 5)], Kind.OPEN)])])
        with pytest.raises(EstimatorContractViolation):
            est.estimate([Structure([square(1, 1)])])

    def test_obstacle_crossing_is_infinite(self, setup):
        d, sc = setup
        est = RoadCostEstimator(sc, d)
        through = Structure([Polygon([(0.5, 5), (9, 9), (10.5, 5)], Kind.OPEN)])
        assert est.estimate([through])[0, 0] == math.inf

    def test_baseline_orders_wells_along_axis(self, setup):
        _, sc = setup
        base = through_wells_baseline(sc)
        assert np.allclose(base, [(0.5, 5), (3, 7), (6, 4), (8, 9), (10.5, 5)])


class TestShadowWave:
    @pytest.fixture
    def setup(self):
        d = Domain.rectangle(100, 100, min_points=2, polygon_kind=Kind.OPEN, max_polygons=4)
        sc = WaveScenario([(90, 20), (90, 50), (90, 80)], (1.0, 0.0))
        return d, ShadowWaveEstimator(sc, d)

    def test_no_breakwaters(self, setup):
        _, est = setup
        assert est.estimate([Structure([])])[0].tolist() == [7.5, 0.0]

    def test_one_wall_halves_everything(self, setup):
        _, est = setup
        wall = Structure([Polygon([(50, 5), (50, 95)], Kind.OPEN)])
        h, length = est.estimate([wall])[0]
        assert h == pytest.approx(7.5 / 2) and length == pytest.approx(90.0)

    def test_counts_match_ray_oracle(self, setup, rng):
        d, est = setup
        sc = est.scenario
        for _ in range(30):
            polys = [Polygon(rng.uniform(0, 100, (int(rng.integers(2, 5)), 2)), Kind.OPEN) for _ in range(3)]
            s = Structure(polys)
            segs = [(tuple(a), tuple(b)) for p in s for a, b in zip(*p.edges())]
            want = [ray_block_count(t, sc.wind_direction, est.reach, segs) for t in sc.targets]
            assert blocking_counts(s, sc, est.reach).tolist() == want
            assert est.heights(s) == pytest.approx([2.5 * 0.5 ** n for n in want])

    def test_wind_normalised_and_checked(self):
        assert WaveScenario([(0, 0)], (3.0, 4.0)).wind_direction == (0.6, 0.8)
        with pytest.raises(ValueError):
            WaveScenario([(0, 0)], (0.0, 0.0))


def _pair(cheap_values, accurate_value=1.0):
    cheap = FunctionEstimator(func=lambda s: cheap_values[s])
    accurate = FunctionEstimator(func=lambda s: accurate_value)
    return cheap, accurate


class TestComposite:
    def test_above_threshold_keeps_cheap(self):
        cheap, acc = _pair({"a": 7.0})
        assert estimate_composite(["a"], cheap, acc, 6.0)[0, 0] == 7.0
        assert acc.call_counter == 0

    def test_below_threshold_recomputed(self):
        cheap, acc = _pair({"a": 5.0}, accurate_value=4.2)
        assert estimate_composite(["a"], cheap, acc, 6.0)[0, 0] == 4.2
        assert acc.call_counter == 1

    def test_exactly_threshold_not_gated(self):
        cheap, acc = _pair({"a": 6.0})
        assert estimate_composite(["a"], cheap, acc, 6.0)[0, 0] == 6.0

    def test_infinite_threshold_equals_accurate(self, rng):
        vals = {i: float(v) for i, v in enumerate(rng.uniform(0, 12, 20))}
        cheap = FunctionEstimator(func=lambda s: vals[s])
        acc = FunctionEstimator(func=lambda s: vals[s] / 2)
        batch = list(range(20))
        out = CompositeEstimator(cheap, acc, math.inf).estimate(batch)
        assert np.array_equal(out, FunctionEstimator(func=lambda s: vals[s] / 2).estimate(batch))

    def test_objective_count_must_match(self):
        with pytest.raises(ValueError):
            CompositeEstimator(FunctionEstimator(func=len), FunctionEstimator(func=len, objective_count=2))
