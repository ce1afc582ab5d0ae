"""Geometric primitives for point/polygon/structure encodings.

Polygons store their vertices as an ``(n, 2)`` float array. Closed polygons
have an implicit closing edge from the last vertex back to the first; the
first vertex is never repeated at the end.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable, NamedTuple, Sequence

import numpy as np
from scipy.spatial import cKDTree

# coincident-vertex / collinearity tolerance, domain units
EPS_PT = 1e-9


class Point(NamedTuple):
    x: float
    y: float


class Kind(str, enum.Enum):
    OPEN = "open"
    CLOSED = "closed"


class Polygon:
    """An ordered vertex list with an open (polyline) or closed form."""

    __slots__ = ("points", "kind", "_edges", "_bbox")

    def __init__(self, points, kind: Kind | str = Kind.CLOSED):
        arr = np.array(points, dtype=float).reshape(-1, 2)
        if not np.all(np.isfinite(arr)):
            raise ValueError("polygon coordinates must be finite")
        arr.flags.writeable = False
        self.points = arr
        self.kind = Kind(kind)
        self._edges = None
        self._bbox = None

    @property
    def closed(self) -> bool:
        return self.kind is Kind.CLOSED

    def __len__(self) -> int:
        return len(self.points)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polygon):
            return NotImplemented
        return self.kind is other.kind and np.array_equal(self.points, other.points)

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Polygon({self.points.tolist()!r}, kind={self.kind.value!r})"

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Return (starts, ends) arrays of shape (E, 2)."""
        if self._edges is None:
            p = self.points
            if self.closed:
                ends = np.concatenate([p[1:], p[:1]])
                ends.flags.writeable = False
                self._edges = (p, ends)
            else:
                self._edges = (p[:-1], p[1:])
        return self._edges

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        """(min corner, max corner)."""
        if self._bbox is None:
            self._bbox = (self.points.min(axis=0), self.points.max(axis=0))
        return self._bbox

    def is_well_formed(self) -> bool:
        """Vertex-count minimum and no coincident consecutive vertices."""
        need = 3 if self.closed else 2
        if len(self.points) < need:
            return False
        a, b = self.edges()
        return bool(np.all(np.hypot(*(b - a).T) > EPS_PT))


class Structure:
    """A set of polygons forming one candidate design."""

    __slots__ = ("polygons",)

    def __init__(self, polygons: Iterable[Polygon] = ()):
        self.polygons = tuple(polygons)

    def __len__(self) -> int:
        return len(self.polygons)

    def __iter__(self):
        return iter(self.polygons)

    def __getitem__(self, i):
        return self.polygons[i]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Structure):
            return NotImplemented
        return len(self) == len(other) and all(
            a == b for a, b in zip(self.polygons, other.polygons)
        )

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"Structure({list(self.polygons)!r})"

    def replace(self, index: int, poly: Polygon) -> "Structure":
        polys = list(self.polygons)
        polys[index] = poly
        return Structure(polys)


# --- measures -------------------------------------------------------------


def polygon_length(poly: Polygon) -> float:
    """Perimeter for closed polygons, polyline length for open ones."""
    a, b = poly.edges()
    return float(np.hypot(*(b - a).T).sum())


def polygon_centroid(poly: Polygon) -> Point:
    """Vertex mean. Used as the pivot for rotation and scaling."""
    c = poly.points.mean(axis=0)
    return Point(float(c[0]), float(c[1]))


def polygon_area(poly: Polygon) -> float:
    """Unsigned shoelace area; zero for open polygons."""
    if not poly.closed:
        return 0.0
    x, y = poly.points.T
    return 0.5 * abs(float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1))))


def structure_length(s: Structure) -> float:
    return sum(polygon_length(p) for p in s)


# --- transforms -----------------------------------------------------------


def rotate_polygon(poly: Polygon, angle_deg: float) -> Polygon:
    """Rotate counter-clockwise about the vertex mean."""
    if angle_deg == 0:
        return Polygon(poly.points, poly.kind)
    t = math.radians(angle_deg)
    c, s = math.cos(t), math.sin(t)
    centre = poly.points.mean(axis=0)
    rel = poly.points - centre
    rot = np.column_stack([c * rel[:, 0] - s * rel[:, 1], s * rel[:, 0] + c * rel[:, 1]])
    return Polygon(rot + centre, poly.kind)


def translate_polygon(poly: Polygon, dx: float, dy: float) -> Polygon:
    return Polygon(poly.points + np.array([dx, dy]), poly.kind)


def resize_polygon(poly: Polygon, factor: float) -> Polygon:
    """Scale about the vertex mean. Not part of the default mutation set."""
    centre = poly.points.mean(axis=0)
    return Polygon(centre + factor * (poly.points - centre), poly.kind)


# --- predicates -----------------------------------------------------------


def _orient(ax, ay, bx, by, cx, cy):
    """Sign of the turn a->b->c with EPS_PT dead band (vectorised)."""
    v = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)
    return (v > EPS_PT).astype(np.int8) - (v < -EPS_PT)


def _on_segment(ax, ay, bx, by, px, py):
    """p lies within the bounding box of segment ab (given collinearity)."""
    return (
        (np.minimum(ax, bx) - EPS_PT <= px)
        & (px <= np.maximum(ax, bx) + EPS_PT)
        & (np.minimum(ay, by) - EPS_PT <= py)
        & (py <= np.maximum(ay, by) + EPS_PT)
    )


def segments_intersect_matrix(a0, a1, b0, b1) -> np.ndarray:
    """Pairwise closed-segment intersection test.

    Args:
        a0, a1: (n, 2) endpoints of the first segment family.
        b0, b1: (m, 2) endpoints of the second family.

    Returns:
        (n, m) boolean matrix; touching endpoints count as intersecting.
    """
    a0 = np.asarray(a0, float)[:, None, :]
    a1 = np.asarray(a1, float)[:, None, :]
    b0 = np.asarray(b0, float)[None, :, :]
    b1 = np.asarray(b1, float)[None, :, :]
    p1x, p1y = a0[..., 0], a0[..., 1]
    p2x, p2y = a1[..., 0], a1[..., 1]
    q1x, q1y = b0[..., 0], b0[..., 1]
    q2x, q2y = b1[..., 0], b1[..., 1]
    d1 = _orient(q1x, q1y, q2x, q2y, p1x, p1y)
    d2 = _orient(q1x, q1y, q2x, q2y, p2x, p2y)
    d3 = _orient(p1x, p1y, p2x, p2y, q1x, q1y)
    d4 = _orient(p1x, p1y, p2x, p2y, q2x, q2y)
    proper = (d1 * d2 < 0) & (d3 * d4 < 0)
    if not ((d1 == 0) | (d2 == 0) | (d3 == 0) | (d4 == 0)).any():
        return proper
    touch = (
        ((d1 == 0) & _on_segment(q1x, q1y, q2x, q2y, p1x, p1y))
        | ((d2 == 0) & _on_segment(q1x, q1y, q2x, q2y, p2x, p2y))
        | ((d3 == 0) & _on_segment(p1x, p1y, p2x, p2y, q1x, q1y))
        | ((d4 == 0) & _on_segment(p1x, p1y, p2x, p2y, q2x, q2y))
    )
    return proper | touch


def segments_intersect(p1, p2, q1, q2) -> bool:
    return bool(segments_intersect_matrix([p1], [p2], [q1], [q2])[0, 0])


def is_simple(poly: Polygon) -> bool:
    """True iff no two non-adjacent edges meet and adjacent edges only share their vertex."""
    if not poly.is_well_formed():
        return False
    a, b = poly.edges()
    n = len(a)
    if n < 2:
        return True
    hit = segments_intersect_matrix(a, b, a, b)
    i, j = np.triu_indices(n, k=1)
    adjacent = j == i + 1
    if poly.closed:
        adjacent |= (i == 0) & (j == n - 1)
    if np.any(hit[i[~adjacent], j[~adjacent]]):
        return False
    # adjacent edges may only share the common vertex: reject fold-backs
    u = b - a
    if poly.closed:
        v = np.roll(u, -1, axis=0)
    else:
        u, v = u[:-1], u[1:]
    cross = u[:, 0] * v[:, 1] - u[:, 1] * v[:, 0]
    dot = (u * v).sum(axis=1)
    folded = (np.abs(cross) <= EPS_PT) & (dot < 0)
    return not np.any(folded)


def point_segment_distance(points, a, b) -> np.ndarray:
    """Distances from each point to each segment, shape (n_points, n_segments)."""
    p = np.asarray(points, float).reshape(-1, 2)[:, None, :]
    a = np.asarray(a, float).reshape(-1, 2)[None, :, :]
    b = np.asarray(b, float).reshape(-1, 2)[None, :, :]
    ab = b - a
    denom = (ab * ab).sum(-1)
    t = np.where(denom > 0, ((p - a) * ab).sum(-1) / np.where(denom > 0, denom, 1.0), 0.0)
    t = np.clip(t, 0.0, 1.0)
    proj = a + t[..., None] * ab
    return np.hypot(*(p - proj).transpose(2, 0, 1))


def distance_to_boundary(points, poly: Polygon) -> np.ndarray:
    """Minimum distance from each point to the polygon's edges."""
    a, b = poly.edges()
    return point_segment_distance(points, a, b).min(axis=1)


def points_in_polygon(points, poly: Polygon) -> np.ndarray:
    """Vectorised boundary-inclusive containment test against a closed polygon."""
    if not poly.closed:
        raise ValueError("containment is only defined for closed polygons")
    pts = np.asarray(points, float).reshape(-1, 2)
    px = pts[:, 0][:, None]
    py = pts[:, 1][:, None]
    a, b = poly.edges()
    ax, ay = a[:, 0][None, :], a[:, 1][None, :]
    bx, by = b[:, 0][None, :], b[:, 1][None, :]
    straddle = (ay > py) != (by > py)
    with np.errstate(divide="ignore", invalid="ignore"):
        xcross = ax + (py - ay) * (bx - ax) / (by - ay)
    crossings = (straddle & (px < xcross)).sum(axis=1)
    inside = (crossings % 2) == 1
    rest = np.flatnonzero(~inside)
    if len(rest):
        inside[rest] = distance_to_boundary(pts[rest], poly) <= EPS_PT
    return inside


def point_in_polygon(p, poly: Polygon) -> bool:
    """Boundary-inclusive; raises ValueError for open polygons."""
    return bool(points_in_polygon([p], poly)[0])


def polygons_intersect(a: Polygon, b: Polygon) -> bool:
    """Edge contact anywhere, or containment inside a closed polygon.

    Single-point contact counts. Containment is checked whenever the
    would-be container is closed, so a polyline lying wholly inside a
    closed polygon also intersects it.
    """
    (amin, amax), (bmin, bmax) = a.bbox, b.bbox
    if np.any(amin > bmax + EPS_PT) or np.any(bmin > amax + EPS_PT):
        return False
    ea = _edges_near(a, bmin, bmax)
    eb = _edges_near(b, amin, amax)
    if len(ea[0]) and len(eb[0]) and np.any(segments_intersect_matrix(ea[0], ea[1], eb[0], eb[1])):
        return True
    # with no edge contact, one polygon can only sit inside the other
    # if its bounding box does too
    if b.closed and np.all(amin >= bmin) and np.all(amax <= bmax) and point_in_polygon(a.points[0], b):
        return True
    if a.closed and np.all(bmin >= amin) and np.all(bmax <= amax) and point_in_polygon(b.points[0], a):
        return True
    return False


def _edges_near(p: Polygon, lo, hi):
    """Edges of ``p`` whose bounding boxes touch the box [lo, hi]."""
    a, b = p.edges()
    keep = np.all((np.minimum(a, b) <= hi + EPS_PT) & (np.maximum(a, b) >= lo - EPS_PT), axis=1)
    if keep.all():
        return a, b
    return a[keep], b[keep]


def convex_hull(points) -> np.ndarray:
    """Monotone-chain hull, counter-clockwise, collinear points dropped."""
    pts = sorted(map(tuple, np.asarray(points, float).tolist()))
    if len(pts) <= 2:
        return np.array(pts, float).reshape(-1, 2)

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= EPS_PT:
            lower.pop()
        lower.append(p)
    upper: list = []
    for p in reversed(pts):
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= EPS_PT:
            upper.pop()
        upper.append(p)
    return np.array(lower[:-1] + upper[:-1], float)


# --- resampling / distance ------------------------------------------------


def resample_boundary(poly: Polygon, count: int) -> np.ndarray:
    """Equal-arclength sample of ``count`` points along the boundary.

    Open polylines include both endpoints; closed rings start at vertex 0 and
    stop one step short of it.
    """
    a, b = poly.edges()
    seg = np.hypot(*(b - a).T)
    total = seg.sum()
    if total <= EPS_PT:
        return np.repeat(poly.points[:1], count, axis=0)
    if poly.closed:
        s = np.arange(count) * (total / count)
    else:
        s = np.linspace(0.0, total, count)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    idx = np.clip(np.searchsorted(cum, s, side="right") - 1, 0, len(seg) - 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(seg[idx] > 0, (s - cum[idx]) / seg[idx], 0.0)
    t = np.clip(t, 0.0, 1.0)
    return a[idx] + t[:, None] * (b[idx] - a[idx])


def _allocate_samples(lengths: Sequence[float], total: int, minimum: int = 8) -> list[int]:
    lengths = np.asarray(lengths, float)
    n = len(lengths)
    if lengths.sum() <= 0:
        share = np.full(n, total / n)
    else:
        share = total * lengths / lengths.sum()
    counts = np.floor(share).astype(int)
    remainder = total - counts.sum()
    order = np.argsort(-(share - counts), kind="stable")
    counts[order[:remainder]] += 1
    return [max(minimum, int(c)) for c in counts]


def structure_samples(s: Structure, count: int) -> np.ndarray:
    """Boundary point cloud for a whole structure, ``count`` points split by length."""
    if len(s) == 0:
        raise ValueError("cannot sample an empty structure")
    alloc = _allocate_samples([polygon_length(p) for p in s], count)
    return np.vstack([resample_boundary(p, k) for p, k in zip(s, alloc)])


def chamfer_distance(a: Structure, b: Structure, samples_per_structure: int = 200) -> float:
    """Symmetric mean nearest-neighbour distance between resampled boundaries."""
    if samples_per_structure < 16:
        raise ValueError("samples_per_structure must be >= 16")
    pa = structure_samples(a, samples_per_structure)
    pb = structure_samples(b, samples_per_structure)
    d_ab, _ = cKDTree(pb).query(pa)
    d_ba, _ = cKDTree(pa).query(pb)
    return 0.5 * (float(np.mean(d_ab)) + float(np.mean(d_ba)))
