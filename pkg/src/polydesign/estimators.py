"""Objective estimators.

Every estimator maps a batch of structures to an ``(n, m)`` array of
objectives to be minimised, and counts how many structures it has seen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .domain import Domain
from .errors import EstimatorContractViolation
from .geometry import (
    EPS_PT,
    Point,
    Structure,
    chamfer_distance,
    point_segment_distance,
    polygons_intersect,
    segments_intersect_matrix,
    structure_length,
)


class Estimator:
    """Base class: subclasses implement ``_evaluate`` for a single structure."""

    objective_count: int = 1
    concurrent_safe: bool = True

    def __init__(self):
        self.call_counter = 0

    def _evaluate(self, s: Structure) -> Sequence[float]:
        raise NotImplementedError

    def estimate(self, batch: Sequence[Structure], executor=None) -> np.ndarray:
        """Objectives for ``batch``; uses ``executor.map`` when given and safe."""
        self.call_counter += len(batch)
        if executor is not None and self.concurrent_safe:
            rows = list(executor.map(self._evaluate, batch))
        else:
            rows = [self._evaluate(s) for s in batch]
        return np.array(rows, dtype=float).reshape(len(batch), self.objective_count)


# --- reference reconstruction --------------------------------------------


class ReferenceDistanceEstimator(Estimator):
    """Chamfer distance to a reference structure, divided by the domain diagonal."""

    def __init__(self, reference: Structure, domain: Domain, samples: int = 200):
        super().__init__()
        if len(reference) == 0:
            raise ValueError("reference structure is empty")
        self.reference = reference
        self.scale = domain.diagonal
        self.samples = samples

    def _evaluate(self, s: Structure):
        return (chamfer_distance(s, self.reference, self.samples) / self.scale,)


def estimate_reference_distance(batch, reference: Structure, domain: Domain, samples: int = 200) -> np.ndarray:
    return ReferenceDistanceEstimator(reference, domain, samples).estimate(batch)


# --- road placement -------------------------------------------------------


@dataclass
class RoadScenario:
    wells: list[Point]
    endpoints: tuple[Point, Point]
    # cost per unit of road length
    r_road: float = 1000.0

    def __post_init__(self):
        self.wells = [Point(*map(float, w)) for w in self.wells]
        a, b = self.endpoints
        self.endpoints = (Point(*map(float, a)), Point(*map(float, b)))


def road_cost(road_points, wells, r_road: float) -> float:
    """r_road * (road length + summed well-to-road distances)."""
    pts = np.asarray(road_points, float)
    length = float(np.hypot(*np.diff(pts, axis=0).T).sum())
    if len(wells):
        edist = float(point_segment_distance(wells, pts[:-1], pts[1:]).min(axis=1).sum())
    else:
        edist = 0.0
    return r_road * (length + edist)


class RoadCostEstimator(Estimator):
    """Road-placement cost. Obstacle crossings score ``+inf``."""

    def __init__(self, scenario: RoadScenario, domain: Domain):
        super().__init__()
        self.scenario = scenario
        self.domain = domain

    def _evaluate(self, s: Structure):
        if len(s) != 1 or s[0].closed:
            raise EstimatorContractViolation("a road is a single open polygon")
        pts = s[0].points
        start, end = (np.array(p) for p in self.scenario.endpoints)
        if np.hypot(*(pts[0] - start)) > EPS_PT or np.hypot(*(pts[-1] - end)) > EPS_PT:
            raise EstimatorContractViolation("road endpoints are not pinned to the scenario endpoints")
        if any(polygons_intersect(s[0], q) for q in self.domain.prohibited):
            return (math.inf,)
        return (road_cost(pts, self.scenario.wells, self.scenario.r_road),)


def estimate_road_npv(batch, scenario: RoadScenario, domain: Domain) -> np.ndarray:
    return RoadCostEstimator(scenario, domain).estimate(batch)


def through_wells_baseline(scenario: RoadScenario) -> np.ndarray:
    """Naive road: straight segments from start through every well (ordered
    along the endpoint axis) to the end."""
    start, end = (np.array(p) for p in scenario.endpoints)
    axis = end - start
    wells = np.array(scenario.wells, float).reshape(-1, 2)
    order = np.argsort((wells - start) @ axis, kind="stable")
    return np.vstack([start, wells[order], end])


# --- breakwater stand-in --------------------------------------------------


@dataclass
class WaveScenario:
    """Targets sheltered from waves arriving along ``wind_direction``.

    Each target's height decays as ``h0 * exp(-gamma * n)`` where ``n`` counts
    breakwater segments crossing the upwind ray from the target.
    """

    targets: list[Point]
    wind_direction: tuple[float, float] = (1.0, 0.0)
    h0: float = 2.5
    gamma: float = math.log(2.0)

    def __post_init__(self):
        self.targets = [Point(*map(float, t)) for t in self.targets]
        w = np.asarray(self.wind_direction, float)
        n = float(np.hypot(*w))
        if n == 0:
            raise ValueError("wind_direction must be non-zero")
        self.wind_direction = (float(w[0] / n), float(w[1] / n))
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")


def blocking_counts(s: Structure, sc: WaveScenario, reach: float) -> np.ndarray:
    """Number of breakwater segments hit by each target's upwind ray of length ``reach``."""
    targets = np.array(sc.targets, float).reshape(-1, 2)
    if len(s) == 0 or len(targets) == 0:
        return np.zeros(len(targets), dtype=int)
    starts, ends = zip(*(p.edges() for p in s))
    a, b = np.vstack(starts), np.vstack(ends)
    far = targets - reach * np.array(sc.wind_direction)
    return segments_intersect_matrix(targets, far, a, b).sum(axis=1)


class ShadowWaveEstimator(Estimator):
    """Two objectives: summed wave height at targets, total breakwater length."""

    objective_count = 2

    def __init__(self, scenario: WaveScenario, domain: Domain):
        super().__init__()
        self.scenario = scenario
        # any ray this long leaves the allowed area
        self.reach = 2.0 * domain.diagonal

    def heights(self, s: Structure) -> np.ndarray:
        n = blocking_counts(s, self.scenario, self.reach)
        return self.scenario.h0 * np.exp(-self.scenario.gamma * n)

    def _evaluate(self, s: Structure):
        return float(self.heights(s).sum()), structure_length(s)


def estimate_shadow_waves(batch, scenario: WaveScenario, domain: Domain) -> np.ndarray:
    return ShadowWaveEstimator(scenario, domain).estimate(batch)


# --- composite ------------------------------------------------------------


class CompositeEstimator(Estimator):
    """Cheap estimate everywhere; accurate re-estimate where cheap < threshold.

    Gating looks at the first objective. Only gated samples reach the
    accurate estimator.
    """

    def __init__(self, cheap: Estimator, accurate: Estimator, threshold: float = 6.0):
        super().__init__()
        if cheap.objective_count != accurate.objective_count:
            raise ValueError("cheap and accurate estimators must agree on objective count")
        self.cheap = cheap
        self.accurate = accurate
        self.threshold = threshold
        self.objective_count = cheap.objective_count
        self.concurrent_safe = cheap.concurrent_safe and accurate.concurrent_safe

    def estimate(self, batch, executor=None) -> np.ndarray:
        self.call_counter += len(batch)
        out = self.cheap.estimate(batch, executor)
        gated = np.flatnonzero(out[:, 0] < self.threshold)
        if len(gated):
            out[gated] = self.accurate.estimate([batch[i] for i in gated], executor)
        return out

    def _evaluate(self, s: Structure):
        return tuple(self.estimate([s])[0])


def estimate_composite(batch, cheap: Estimator, accurate: Estimator, threshold: float = 6.0) -> np.ndarray:
    return CompositeEstimator(cheap, accurate, threshold).estimate(batch)


@dataclass
class FunctionEstimator(Estimator):
    """Wrap a plain callable ``f(structure) -> sequence of floats``."""

    func: object = None
    objective_count: int = 1
    concurrent_safe: bool = True
    call_counter: int = field(default=0, init=False)

    def _evaluate(self, s: Structure):
        return tuple(np.atleast_1d(self.func(s)))
