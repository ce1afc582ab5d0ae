"""Two-stage random structure sampler.

Each polygon is drawn by first placing a circular centroid region that fits
in free space, then scattering normally distributed vertices inside it.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .domain import Domain, postprocess
from .errors import RepairFailed, SamplingExhausted
from .geometry import Polygon, Structure, distance_to_boundary, points_in_polygon

logger = logging.getLogger(__name__)


@dataclass
class SamplerConfig:
    """Sampler settings.

    ``rect`` defaults to the bounding box of the allowed area. ``n_polygons``
    of ``None`` draws the count uniformly from the domain's polygon range.
    ``min_points`` overrides the domain lower bound when set.
    """

    max_points: int
    n_polygons: int | None = None
    attempt_cap: int = 1000
    min_points: int | None = None
    rect: tuple[float, float, float, float] | None = None

    def __post_init__(self):
        if self.attempt_cap < 1:
            raise ValueError("attempt_cap must be >= 1")
        if self.n_polygons is not None and self.n_polygons < 1:
            raise ValueError("n_polygons must be >= 1")
        if self.rect is not None:
            x0, y0, x1, y1 = self.rect
            if x1 <= x0 or y1 <= y0:
                raise ValueError("rect must have positive width and height")

    @classmethod
    def for_domain(cls, d: Domain, **kwargs) -> "SamplerConfig":
        kwargs.setdefault("max_points", d.max_points)
        return cls(**kwargs)

    def check(self, d: Domain) -> None:
        if self.max_points < d.min_points:
            raise ValueError("sampler max_points below the domain's min_points")


def _rect(d: Domain, cfg: SamplerConfig):
    return cfg.rect if cfg.rect is not None else d.bounds


def _draw_centre(d: Domain, rect, rng: np.random.Generator, budget: list[int], cap: int) -> np.ndarray:
    x0, y0, x1, y1 = rect
    while True:
        c = np.array([rng.uniform(x0, x1), rng.uniform(y0, y1)])
        if d.is_free(c)[0]:
            return c
        budget[0] += 1
        if budget[0] > cap:
            raise SamplingExhausted("no centroid found in free space")


def _region_ok(c: np.ndarray, r: float, placed: list[Polygon], d: Domain) -> bool:
    """Disk of radius ``r`` lies in the allowed area and clear of all obstacles."""
    if distance_to_boundary(c, d.allowed_area)[0] < r:
        return False
    for q in d.prohibited:
        if distance_to_boundary(c, q)[0] <= r:
            return False
    for q in placed:
        if q.closed and points_in_polygon(c, q)[0]:
            return False
        if distance_to_boundary(c, q)[0] <= r:
            return False
    return True


def _point_count(d: Domain, cfg: SamplerConfig, rng) -> int:
    lo = d.min_points if cfg.min_points is None else max(cfg.min_points, 2)
    hi = max(cfg.max_points, lo)
    return int(rng.integers(lo, hi + 1))


def sample_polygon(
    placed: list[Polygon],
    d: Domain,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    trace: list | None = None,
) -> Polygon:
    """Draw one polygon whose centroid region avoids everything in ``placed``."""
    x0, y0, x1, y1 = rect = _rect(d, cfg)
    n_poly = len(placed) + 1
    r_bound = 0.5 * min(x1 - x0, y1 - y0) / n_poly
    cap = cfg.attempt_cap
    redraw_every = max(1, cap // 4)
    failures = [0]
    centre = _draw_centre(d, rect, rng, failures, cap)
    radius_failures = 0
    while True:
        # U((0, r_bound]]
        r = r_bound - rng.uniform(0.0, r_bound)
        if _region_ok(centre, r, placed, d):
            break
        failures[0] += 1
        radius_failures += 1
        if failures[0] > cap:
            raise SamplingExhausted(f"no valid centroid region after {cap} attempts")
        if radius_failures % redraw_every == 0:
            centre = _draw_centre(d, rect, rng, failures, cap)
    n_point = _point_count(d, cfg, rng)
    pts = rng.normal(centre, r / 3.0, size=(n_point, 2))
    rel = pts - centre
    dist = np.hypot(*rel.T)
    over = dist > r
    pts[over] = centre + rel[over] * (r / dist[over])[:, None]
    rel = pts - centre
    pts = pts[np.argsort(np.arctan2(rel[:, 1], rel[:, 0]), kind="stable")]
    if trace is not None:
        trace.append({"centre": centre.copy(), "radius": r, "radius_bound": r_bound, "points": pts.copy()})
    return Polygon(pts, d.polygon_kind)


def _sample_pinned(d: Domain, cfg: SamplerConfig, rng, trace=None) -> Structure:
    """Pinned-endpoint polyline: interior vertices from one centroid region."""
    start, end = (np.array(p) for p in d.fixed_endpoints)
    axis = end - start
    axis = axis / np.hypot(*axis)
    last_error = None
    for _ in range(cfg.attempt_cap):
        interior_cfg = SamplerConfig(
            max_points=max(cfg.max_points - 2, 1),
            min_points=max(d.min_points - 2, 1),
            attempt_cap=cfg.attempt_cap,
            rect=cfg.rect,
        )
        blob = sample_polygon([], d, interior_cfg, rng, trace)
        inner = blob.points[np.argsort((blob.points - start) @ axis, kind="stable")]
        raw = Structure([Polygon(np.vstack([start, inner, end]), d.polygon_kind)])
        try:
            return postprocess(raw, d, rng)
        except RepairFailed as exc:
            last_error = exc
    raise SamplingExhausted(f"could not sample a valid pinned polyline: {last_error}")


def sample_structure(
    d: Domain,
    cfg: SamplerConfig,
    rng: np.random.Generator,
    trace: list | None = None,
) -> Structure:
    """Sample one structure and run it through repair.

    Raises:
        SamplingExhausted: a rejection loop exceeded ``cfg.attempt_cap``, or
            repair of the raw sample failed ``attempt_cap`` times in a row.
    """
    cfg.check(d)
    if d.fixed_endpoints is not None:
        return _sample_pinned(d, cfg, rng, trace)
    last_error = None
    for _ in range(cfg.attempt_cap):
        if cfg.n_polygons is not None:
            n = cfg.n_polygons
        else:
            n = int(rng.integers(d.min_polygons, d.max_polygons + 1))
        placed: list[Polygon] = []
        for _ in range(n):
            placed.append(sample_polygon(placed, d, cfg, rng, trace))
        try:
            return postprocess(Structure(placed), d, rng)
        except RepairFailed as exc:
            last_error = exc
            logger.debug("discarding unrepairable sample: %s", exc)
    raise SamplingExhausted(f"repair kept failing: {last_error}")


def sample_batch(d: Domain, cfg: SamplerConfig, count: int, rng: np.random.Generator) -> list[Structure]:
    if count < 1:
        raise ValueError("count must be >= 1")
    return [sample_structure(d, cfg, rng) for _ in range(count)]


def sample_additional_polygon(s: Structure, d: Domain, rng: np.random.Generator,
                              cfg: SamplerConfig | None = None) -> Polygon:
    """Resampling hook used by repair and the add-polygon mutation."""
    if cfg is None:
        cfg = SamplerConfig.for_domain(d)
    return sample_polygon(list(s), d, cfg, rng)


class StandardSampler:
    """Sampler binding for a toolkit.

    Counts ``sample`` (batch) and ``sample_one`` calls separately so the
    design loop's accounting can be checked.
    """

    def __init__(self, domain: Domain, config: SamplerConfig | None = None):
        self.domain = domain
        self.config = config or SamplerConfig.for_domain(domain)
        self.config.check(domain)
        self.batch_calls = 0
        self.single_calls = 0

    def sample(self, count: int, rng: np.random.Generator) -> list[Structure]:
        self.batch_calls += 1
        if count == 0:
            return []
        return sample_batch(self.domain, self.config, count, rng)

    def sample_one(self, rng: np.random.Generator) -> Structure:
        self.single_calls += 1
        return sample_structure(self.domain, self.config, rng)

    def resample_polygon(self, s: Structure, d: Domain, rng: np.random.Generator) -> Polygon:
        return sample_additional_polygon(s, d, rng, self.config)
