"""Built-in desk-scale problem suites: reconstruction, breakwaters, roads."""

from __future__ import annotations

import math

import numpy as np

from .domain import Domain, is_valid
from .errors import SamplingExhausted
from .estimators import RoadScenario, WaveScenario
from .geometry import (
    Kind,
    Point,
    Polygon,
    Structure,
    distance_to_boundary,
    polygon_area,
    resize_polygon,
)
from .sampler import SamplerConfig, sample_structure


def reconstruction_domain(size: float = 100.0, max_polygons: int = 1, min_points: int = 3,
                          max_points: int = 10) -> Domain:
    return Domain.rectangle(size, size, min_points=min_points, max_points=max_points,
                            min_polygons=1, max_polygons=max_polygons, polygon_kind=Kind.CLOSED)


def make_reference(d: Domain, rng, n_polygons: int = 1, n_points: int | None = None) -> Structure:
    """Random target structure for reconstruction runs."""
    cfg = SamplerConfig.for_domain(d, n_polygons=n_polygons)
    if n_points is not None:
        cfg.min_points = cfg.max_points = n_points
    return sample_structure(d, cfg, rng)


def breakwater_problem(size: float = 100.0, n_targets: int = 4, wind_direction=(1.0, 0.0),
                       max_polygons: int = 4, max_points: int = 5, h0: float = 2.5,
                       gamma: float = math.log(2.0)) -> tuple[Domain, WaveScenario]:
    """Open-polyline breakwaters shielding targets on the downwind edge of a square basin."""
    ys = np.linspace(0.2 * size, 0.8 * size, n_targets)
    targets = [Point(0.9 * size, float(y)) for y in ys]
    d = Domain.rectangle(size, size, min_points=2, max_points=max_points, min_polygons=1,
                         max_polygons=max_polygons, polygon_kind=Kind.OPEN, targets=targets)
    return d, WaveScenario(targets, wind_direction, h0, gamma)


def _obstacles(size: float, fraction: float, count: int, rng, attempts: int = 100) -> list[Polygon]:
    field = Domain.rectangle(size, size, min_points=4, max_points=8, min_polygons=count,
                             max_polygons=count)
    share = fraction * size * size / count
    for _ in range(attempts):
        raw = sample_structure(field, SamplerConfig.for_domain(field, n_polygons=count), rng)
        scaled = []
        for p in raw:
            area = polygon_area(p)
            if area <= 0:
                break
            scaled.append(resize_polygon(p, math.sqrt(share / area)))
        if len(scaled) == count and is_valid(Structure(scaled), field):
            return scaled
    raise SamplingExhausted("could not place obstacles")


def road_problem(rng, size: float = 100.0, n_wells: int = 5, obstacle_fraction: float = 0.02,
                 n_obstacles: int = 4, r_road: float = 1000.0,
                 max_points: int = 12) -> tuple[Domain, RoadScenario]:
    """Random field: obstacles covering ``obstacle_fraction`` of the area,
    wells in free space, road pinned to the left and right edges."""
    obstacles = _obstacles(size, obstacle_fraction, n_obstacles, rng) if obstacle_fraction > 0 else []
    probe = Domain.rectangle(size, size, prohibited=obstacles)
    margin = 0.02 * size

    def free_point(xlo, xhi):
        for _ in range(10_000):
            p = np.array([rng.uniform(xlo, xhi), rng.uniform(margin, size - margin)])
            if probe.is_free(p)[0] and all(
                distance_to_boundary(p, q)[0] > margin for q in obstacles
            ):
                return Point(float(p[0]), float(p[1]))
        raise SamplingExhausted("no free point for a well or endpoint")

    wells = [free_point(margin, size - margin) for _ in range(n_wells)]
    endpoints = (free_point(margin, 2 * margin), free_point(size - 2 * margin, size - margin))
    d = Domain.rectangle(size, size, prohibited=obstacles, min_points=2, max_points=max_points,
                         min_polygons=1, max_polygons=1, polygon_kind=Kind.OPEN,
                         targets=wells, fixed_endpoints=endpoints)
    return d, RoadScenario(wells, endpoints, r_road)
