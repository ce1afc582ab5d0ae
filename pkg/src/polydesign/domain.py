"""Problem geometry, the constraint check and structure repair."""

from __future__ import annotations

import enum
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, NamedTuple, Sequence

import numpy as np

from .errors import RepairFailed, SamplingExhausted
from .geometry import (
    EPS_PT,
    Kind,
    Point,
    Polygon,
    Structure,
    convex_hull,
    distance_to_boundary,
    is_simple,
    point_segment_distance,
    points_in_polygon,
    polygon_length,
    polygons_intersect,
    segments_intersect_matrix,
    translate_polygon,
)

logger = logging.getLogger(__name__)

MAX_REPAIR_ROUNDS = 10
TRANSLATION_ATTEMPTS = 3


@dataclass(eq=False)
class Domain:
    """Allowed area, fixed obstacles and per-structure cardinality limits.

    ``fixed_endpoints`` turns the domain into a pinned-polyline domain: every
    structure is a single open polygon whose first and last vertices are
    restored to the given points during repair.
    """

    allowed_area: Polygon
    prohibited: list[Polygon] = field(default_factory=list)
    targets: list[Point] = field(default_factory=list)
    min_points: int = 3
    max_points: int = 10
    min_polygons: int = 1
    max_polygons: int = 1
    polygon_kind: Kind = Kind.CLOSED
    fixed_endpoints: tuple[Point, Point] | None = None

    def __post_init__(self):
        self.polygon_kind = Kind(self.polygon_kind)
        self.targets = [Point(*map(float, t)) for t in self.targets]
        if self.fixed_endpoints is not None:
            a, b = self.fixed_endpoints
            self.fixed_endpoints = (Point(*map(float, a)), Point(*map(float, b)))
        if not self.allowed_area.closed or not is_simple(self.allowed_area):
            raise ValueError("allowed_area must be a simple closed polygon")
        for k, p in enumerate(self.prohibited):
            if not p.closed or not is_simple(p):
                raise ValueError(f"prohibited[{k}] must be a simple closed polygon")
            if not np.all(points_in_polygon(p.points, self.allowed_area)):
                raise ValueError(f"prohibited[{k}] must lie inside allowed_area")
        if not 2 <= self.min_points <= self.max_points:
            raise ValueError("need 2 <= min_points <= max_points")
        if not 1 <= self.min_polygons <= self.max_polygons:
            raise ValueError("need 1 <= min_polygons <= max_polygons")
        if self.polygon_kind is Kind.CLOSED and self.min_points < 3:
            raise ValueError("closed polygons need min_points >= 3")
        if self.fixed_endpoints is not None:
            if self.polygon_kind is not Kind.OPEN or self.max_polygons != 1:
                raise ValueError("fixed endpoints need a single open polygon per structure")
            if not self.is_free(np.array(self.fixed_endpoints)).all():
                raise ValueError("fixed endpoints must be in free space")

    @cached_property
    def bounds(self) -> tuple[float, float, float, float]:
        xmin, ymin = self.allowed_area.points.min(axis=0)
        xmax, ymax = self.allowed_area.points.max(axis=0)
        return float(xmin), float(ymin), float(xmax), float(ymax)

    @property
    def width(self) -> float:
        return self.bounds[2] - self.bounds[0]

    @property
    def height(self) -> float:
        return self.bounds[3] - self.bounds[1]

    @cached_property
    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)

    @property
    def eps_in(self) -> float:
        """Inward clamping offset."""
        return 1e-6 * self.diagonal

    @cached_property
    def allowed_centre(self) -> np.ndarray:
        return self.allowed_area.points.mean(axis=0)

    def is_free(self, points) -> np.ndarray:
        """Inside the allowed area and outside every prohibited element."""
        pts = np.asarray(points, float).reshape(-1, 2)
        ok = points_in_polygon(pts, self.allowed_area)
        for p in self.prohibited:
            ok &= ~points_in_polygon(pts, p)
        return ok

    @classmethod
    def rectangle(cls, width: float, height: float, x0: float = 0.0, y0: float = 0.0, **kwargs):
        area = Polygon(
            [(x0, y0), (x0 + width, y0), (x0 + width, y0 + height), (x0, y0 + height)],
            Kind.CLOSED,
        )
        return cls(allowed_area=area, **kwargs)


class ViolationKind(str, enum.Enum):
    OUT_OF_BOUNDS = "OutOfBounds"
    SELF_INTERSECTION = "SelfIntersection"
    MUTUAL_INTERSECTION = "MutualIntersection"
    PROHIBITED_INTERSECTION = "ProhibitedIntersection"
    TOO_FEW_POINTS = "TooFewPoints"
    TOO_MANY_POINTS = "TooManyPoints"
    POLYGON_COUNT = "PolygonCountViolation"
    # pinned-polyline domains only
    ENDPOINTS_NOT_PINNED = "EndpointsNotPinned"


class Violation(NamedTuple):
    kind: ViolationKind
    # polygon index; (i, j) polygon pair; (i, k) polygon/prohibited pair; () for counts
    indices: tuple[int, ...]


@dataclass
class ValidationReport:
    violations: list[Violation] = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations

    def kinds(self) -> set[ViolationKind]:
        return {v.kind for v in self.violations}

    def to_dict(self) -> dict:
        return {
            "valid": self.valid,
            "violations": [{"kind": v.kind.value, "indices": list(v.indices)} for v in self.violations],
        }


def validate(s: Structure, d: Domain) -> ValidationReport:
    """Run every constraint check and collect all violations."""
    out: list[Violation] = []
    polys = list(s)
    for i, p in enumerate(polys):
        if not np.all(points_in_polygon(p.points, d.allowed_area)):
            out.append(Violation(ViolationKind.OUT_OF_BOUNDS, (i,)))
    for i, p in enumerate(polys):
        if not is_simple(p):
            out.append(Violation(ViolationKind.SELF_INTERSECTION, (i,)))
    for i in range(len(polys)):
        for j in range(i + 1, len(polys)):
            if polygons_intersect(polys[i], polys[j]):
                out.append(Violation(ViolationKind.MUTUAL_INTERSECTION, (i, j)))
    for i, p in enumerate(polys):
        for k, q in enumerate(d.prohibited):
            if polygons_intersect(p, q):
                out.append(Violation(ViolationKind.PROHIBITED_INTERSECTION, (i, k)))
    for i, p in enumerate(polys):
        if len(p) < d.min_points:
            out.append(Violation(ViolationKind.TOO_FEW_POINTS, (i,)))
        elif len(p) > d.max_points:
            out.append(Violation(ViolationKind.TOO_MANY_POINTS, (i,)))
    if not d.min_polygons <= len(polys) <= d.max_polygons:
        out.append(Violation(ViolationKind.POLYGON_COUNT, ()))
    if d.fixed_endpoints is not None:
        ends = np.array(d.fixed_endpoints)
        for i, p in enumerate(polys):
            if np.hypot(*(p.points[[0, -1]] - ends).T).max() > EPS_PT:
                out.append(Violation(ViolationKind.ENDPOINTS_NOT_PINNED, (i,)))
    return ValidationReport(out)


def is_valid(s: Structure, d: Domain) -> bool:
    return validate(s, d).valid


# --- repair ---------------------------------------------------------------

Resampler = Callable[[Structure, Domain, np.random.Generator], Polygon]


def postprocess(
    s: Structure,
    d: Domain,
    rng: np.random.Generator,
    *,
    resample: Resampler | None = None,
    max_rounds: int = MAX_REPAIR_ROUNDS,
) -> Structure:
    """Repair ``s`` until it satisfies ``validate``.

    Rules run in a fixed order each round: vertex clean-up (and endpoint
    pinning), boundary clamping, untangling, per-polygon vertex limits,
    prohibited-element clearance, mutual clearance, and polygon-count limits.
    Already-valid structures are returned as the same object.

    Raises:
        RepairFailed: still invalid after ``max_rounds`` rounds.
    """
    if validate(s, d).valid:
        return s
    if resample is None:
        from .sampler import sample_additional_polygon as resample
    polys = list(s)
    for _ in range(max_rounds):
        polys = [_clean(p, d) for p in polys]
        polys = [_clamp_into_area(p, d) for p in polys]
        polys = [_clean(p, d) for p in polys]
        polys = [p if is_simple(p) else _untangle(p, d) for p in polys]
        polys = _enforce_vertex_limits(polys, d)
        polys = _clear_prohibited(polys, d)
        polys = _clear_mutual(polys, d)
        polys = _enforce_polygon_count(polys, d, rng, resample)
        out = Structure(polys)
        if validate(out, d).valid:
            return out
    raise RepairFailed(f"structure still invalid after {max_rounds} repair rounds: "
                       f"{sorted(k.value for k in validate(Structure(polys), d).kinds())}")


def _dedupe(points: np.ndarray, closed: bool) -> np.ndarray:
    if len(points) < 2:
        return points
    step = np.hypot(*np.diff(points, axis=0).T)
    keep = np.concatenate([[True], step > EPS_PT])
    pts = points[keep]
    if closed and len(pts) > 1 and np.hypot(*(pts[-1] - pts[0])) <= EPS_PT:
        pts = pts[:-1]
    return pts


def _clean(p: Polygon, d: Domain) -> Polygon:
    pts = np.array(p.points)
    if d.fixed_endpoints is not None and len(pts):
        start, end = np.array(d.fixed_endpoints[0]), np.array(d.fixed_endpoints[1])
        if len(pts) < 2:
            pts = np.vstack([start, end])
        pts[0], pts[-1] = start, end
        inner = pts[1:-1]
        # interior vertices sitting on a pinned endpoint are dropped
        far = (np.hypot(*(inner - start).T) > EPS_PT) & (np.hypot(*(inner - end).T) > EPS_PT)
        pts = np.vstack([start, inner[far], end])
    pts = _dedupe(pts, p.closed)
    return Polygon(pts, p.kind)


def _inside_strict(pt: np.ndarray, d: Domain) -> bool:
    return bool(points_in_polygon(pt, d.allowed_area)[0]) and distance_to_boundary(pt, d.allowed_area)[0] > 0


def _clamp_into_area(p: Polygon, d: Domain) -> Polygon:
    pts = p.points
    outside = ~points_in_polygon(pts, d.allowed_area)
    if not outside.any():
        return p
    a, b = d.allowed_area.edges()
    pts = np.array(pts)
    for idx in np.flatnonzero(outside):
        v = pts[idx]
        dist = point_segment_distance(v, a, b)[0]
        e = int(np.argmin(dist))
        ab = b[e] - a[e]
        t = np.clip(np.dot(v - a[e], ab) / np.dot(ab, ab), 0.0, 1.0)
        q = a[e] + t * ab
        pts[idx] = _step_inside(q, v, d)
    return Polygon(pts, p.kind)


def _step_inside(q: np.ndarray, origin: np.ndarray, d: Domain) -> np.ndarray:
    """Move boundary point ``q`` by eps_in into the allowed area."""
    eps = d.eps_in
    for direction in (q - origin, d.allowed_centre - q):
        n = np.hypot(*direction)
        if n <= 0:
            continue
        cand = q + eps * direction / n
        if _inside_strict(cand[None], d):
            return cand
    # non-convex corner: walk toward the area centre until strictly inside
    c = d.allowed_centre
    for frac in (1e-4, 1e-3, 1e-2, 1e-1, 0.5, 1.0):
        cand = q + frac * (c - q)
        if _inside_strict(cand[None], d):
            return cand
    return c.copy()


def _untangle(p: Polygon, d: Domain) -> Polygon:
    pts = p.points
    if d.fixed_endpoints is not None:
        start, end = pts[0], pts[-1]
        axis = end - start
        axis = axis / (np.hypot(*axis) or 1.0)
        inner = pts[1:-1]
        key = (inner - start) @ axis
        order = np.lexsort(((inner - start) @ np.array([-axis[1], axis[0]]), key))
        return Polygon(np.vstack([start, inner[order], end]), p.kind)
    centre = pts.mean(axis=0)
    rel = pts - centre
    order = np.lexsort((np.hypot(*rel.T), np.arctan2(rel[:, 1], rel[:, 0])))
    cand = Polygon(_dedupe(pts[order], p.closed), p.kind)
    if is_simple(cand):
        return cand
    if p.closed:
        hull = convex_hull(pts)
        return Polygon(hull if len(hull) else pts[:1], p.kind)
    # open fallback: monotone along the principal axis
    _, _, vt = np.linalg.svd(rel, full_matrices=False)
    key = rel @ vt[0]
    return Polygon(_dedupe(pts[np.argsort(key, kind="stable")], False), p.kind)


def _enforce_vertex_limits(polys: list[Polygon], d: Domain) -> list[Polygon]:
    out = []
    for i, p in enumerate(polys):
        if len(p) < d.min_points:
            logger.debug("dropping polygon %d with %d vertices", i, len(p))
            continue
        if len(p) > d.max_points:
            p = _trim(p, d)
        out.append(p)
    return out


def _trim(p: Polygon, d: Domain) -> Polygon:
    pts = np.array(p.points)
    excess = len(pts) - d.max_points
    if d.fixed_endpoints is not None:
        # drop the interior vertices whose removal shortens the road least
        pts = list(pts)
        for _ in range(excess):
            cost = [
                np.hypot(*(pts[k] - pts[k - 1])) + np.hypot(*(pts[k + 1] - pts[k]))
                - np.hypot(*(pts[k + 1] - pts[k - 1]))
                for k in range(1, len(pts) - 1)
            ]
            del pts[1 + int(np.argmin(cost))]
        return Polygon(np.array(pts), p.kind)
    centre = pts.mean(axis=0)
    far = np.argsort(-np.hypot(*(pts - centre).T), kind="stable")[:excess]
    return Polygon(np.delete(pts, far, axis=0), p.kind)


def _separating_shifts(p: Polygon, q: Polygon):
    """Candidate translations moving ``p`` clear of ``q`` along three directions."""
    u = p.points.mean(axis=0) - q.points.mean(axis=0)
    n = np.hypot(*u)
    u = np.array([1.0, 0.0]) if n <= EPS_PT else u / n
    perp = np.array([-u[1], u[0]])
    for direction in (u, perp, -perp):
        extent = (q.points @ direction).max() - (p.points @ direction).min()
        yield direction * max(extent, 0.0)


def _clear_of(p: Polygon, d: Domain, others: Sequence[Polygon]) -> bool:
    if not np.all(points_in_polygon(p.points, d.allowed_area)):
        return False
    if any(polygons_intersect(p, q) for q in d.prohibited):
        return False
    return not any(polygons_intersect(p, q) for q in others)


def _move_away(p: Polygon, q: Polygon, d: Domain, others: Sequence[Polygon]) -> Polygon | None:
    margin = d.eps_in
    for shift in list(_separating_shifts(p, q))[:TRANSLATION_ATTEMPTS]:
        n = np.hypot(*shift)
        step = shift + (shift / n * margin if n > 0 else 0.0)
        moved = translate_polygon(p, *step)
        if _clear_of(moved, d, others):
            return moved
    return None


def _clear_prohibited(polys: list[Polygon], d: Domain) -> list[Polygon]:
    if not d.prohibited:
        return polys
    out = []
    for i, p in enumerate(polys):
        hits = [q for q in d.prohibited if polygons_intersect(p, q)]
        if not hits:
            out.append(p)
            continue
        if d.fixed_endpoints is not None:
            for q in hits:
                p = _detour(p, q, d)
            out.append(p)
            continue
        moved = _move_away(p, hits[0], d, [])
        if moved is None:
            logger.debug("deleting polygon %d: cannot clear prohibited element", i)
        else:
            out.append(moved)
    return out


def _detour(p: Polygon, q: Polygon, d: Domain) -> Polygon:
    """Route a pinned polyline around obstacle ``q``."""
    margin = max(d.eps_in, 1e-3 * d.diagonal)
    qc = q.points.mean(axis=0)
    pts = np.array(p.points)
    inside = points_in_polygon(pts, q)
    inside[0] = inside[-1] = False
    for idx in np.flatnonzero(inside):
        u = pts[idx] - qc
        n = np.hypot(*u)
        u = np.array([0.0, 1.0]) if n <= EPS_PT else u / n
        pts[idx] = pts[idx] + u * ((q.points - pts[idx]) @ u).max() + u * margin
    # every vertex is outside q now, so a crossing segment must hit an edge
    qa, qb = q.edges()
    crossing = segments_intersect_matrix(pts[:-1], pts[1:], qa, qb).any(axis=1)
    out = [pts[0]]
    for a, b, hit in zip(pts[:-1], pts[1:], crossing):
        if hit:
            m = 0.5 * (a + b)
            seg = b - a
            v = np.array([-seg[1], seg[0]])
            v = v / (np.hypot(*v) or 1.0)
            if np.dot(m - qc, v) < 0:
                v = -v
            out.append(m + v * (max(((q.points - m) @ v).max(), 0.0) + margin))
        out.append(b)
    return Polygon(np.array(out), p.kind)


def _clear_mutual(polys: list[Polygon], d: Domain) -> list[Polygon]:
    out: list[Polygon] = []
    for p in polys:
        clash = [q for q in out if polygons_intersect(p, q)]
        if not clash:
            out.append(p)
            continue
        moved = _move_away(p, clash[0], d, out)
        if moved is not None:
            out.append(moved)
            continue
        # keep whichever of the pair is longer
        k = next(i for i, q in enumerate(out) if q is clash[0])
        if polygon_length(p) > polygon_length(clash[0]) and not any(
            polygons_intersect(p, q) for j, q in enumerate(out) if j != k
        ):
            out[k] = p
        logger.debug("deleted a polygon to resolve mutual intersection")
    return out


def _enforce_polygon_count(polys, d: Domain, rng, resample: Resampler) -> list[Polygon]:
    if len(polys) > d.max_polygons:
        keep = sorted(
            sorted(range(len(polys)), key=lambda i: -polygon_length(polys[i]))[: d.max_polygons]
        )
        polys = [polys[i] for i in keep]
    while len(polys) < d.min_polygons:
        try:
            polys = polys + [resample(Structure(polys), d, rng)]
        except SamplingExhausted:
            logger.debug("could not resample a polygon to meet min_polygons")
            break
    return polys
