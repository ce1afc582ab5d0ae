"""Geometric mutation and crossover operators over structures."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .domain import Domain, postprocess
from .errors import CrossoverFailed, MutationFailed, RepairFailed, SamplingExhausted
from .geometry import Polygon, Structure, polygon_length, rotate_polygon, translate_polygon
from .sampler import SamplerConfig, sample_additional_polygon


class Operator(str, enum.Enum):
    ROTATE = "rotate"
    DISPLACE_POLYGON = "displace_polygon"
    DISPLACE_POINT = "displace_point"
    ADD_POINT = "add_point"
    REMOVE_POINT = "remove_point"
    ADD_POLYGON = "add_polygon"
    REMOVE_POLYGON = "remove_polygon"


OPERATORS = tuple(Operator)


@dataclass
class MutationConfig:
    max_rotation_deg: float = 45.0
    # fraction of the domain diagonal
    displacement_fraction: float = 0.05
    operator_weights: dict[Operator, float] = field(
        default_factory=lambda: {op: 1.0 for op in OPERATORS}
    )

    def __post_init__(self):
        w = {Operator(k): float(v) for k, v in dict(self.operator_weights).items()}
        missing = set(OPERATORS) - set(w)
        if missing:
            raise ValueError(f"operator_weights missing {sorted(m.value for m in missing)}")
        if any(v < 0 for v in w.values()) or sum(w.values()) <= 0:
            raise ValueError("operator weights must be non-negative with a positive sum")
        self.operator_weights = {op: w[op] for op in OPERATORS}

    @classmethod
    def only(cls, *ops: Operator, **kwargs) -> "MutationConfig":
        weights = {op: (1.0 if op in ops else 0.0) for op in OPERATORS}
        return cls(operator_weights=weights, **kwargs)


def _pinned(d: Domain) -> bool:
    return d.fixed_endpoints is not None


def _free_vertices(p: Polygon, d: Domain) -> np.ndarray:
    """Vertex indices an operator may move or delete."""
    if _pinned(d):
        return np.arange(1, len(p) - 1)
    return np.arange(len(p))


def _applicable(op: Operator, s: Structure, d: Domain) -> bool:
    if op is Operator.ADD_POLYGON:
        return len(s) < d.max_polygons
    if op is Operator.REMOVE_POLYGON:
        return len(s) > d.min_polygons
    if op is Operator.REMOVE_POINT:
        return any(len(p) > d.min_points and len(_free_vertices(p, d)) > 0 for p in s)
    if op is Operator.ADD_POINT:
        return any(len(p) < d.max_points for p in s)
    if op is Operator.DISPLACE_POINT:
        return any(len(_free_vertices(p, d)) > 0 for p in s)
    return len(s) > 0


def choose_operator(s: Structure, d: Domain, cfg: MutationConfig, rng: np.random.Generator) -> Operator:
    """Weighted draw; inapplicable operators are excluded before drawing."""
    ops = [op for op in OPERATORS if cfg.operator_weights[op] > 0 and _applicable(op, s, d)]
    if not ops:
        raise MutationFailed("no applicable mutation operator")
    w = np.array([cfg.operator_weights[op] for op in ops])
    return ops[int(rng.choice(len(ops), p=w / w.sum()))]


def _random_shift(limit: float, rng) -> np.ndarray:
    angle = rng.uniform(0.0, 2 * np.pi)
    mag = rng.uniform(0.0, limit)
    return mag * np.array([np.cos(angle), np.sin(angle)])


def apply_operator(
    op: Operator,
    s: Structure,
    d: Domain,
    cfg: MutationConfig,
    rng: np.random.Generator,
    sampler_config: SamplerConfig | None = None,
) -> Structure:
    """Apply ``op`` without repair. Targets are drawn uniformly among eligible polygons."""
    polys = list(s)
    step = cfg.displacement_fraction * d.diagonal

    def pick(pred=lambda p: True) -> int:
        idx = [i for i, p in enumerate(polys) if pred(p)]
        return idx[int(rng.integers(len(idx)))]

    if op is Operator.ROTATE:
        i = pick()
        polys[i] = rotate_polygon(polys[i], rng.uniform(-cfg.max_rotation_deg, cfg.max_rotation_deg))
    elif op is Operator.DISPLACE_POLYGON:
        i = pick()
        polys[i] = translate_polygon(polys[i], *_random_shift(step, rng))
    elif op is Operator.DISPLACE_POINT:
        i = pick(lambda p: len(_free_vertices(p, d)) > 0)
        free = _free_vertices(polys[i], d)
        k = int(free[rng.integers(len(free))])
        pts = np.array(polys[i].points)
        pts[k] += _random_shift(step, rng)
        polys[i] = Polygon(pts, polys[i].kind)
    elif op is Operator.ADD_POINT:
        i = pick(lambda p: len(p) < d.max_points)
        p = polys[i]
        a, b = p.edges()
        e = int(rng.integers(len(a)))
        sigma = np.hypot(*(b[e] - a[e])) / 6.0
        new = 0.5 * (a[e] + b[e]) + rng.normal(0.0, sigma, size=2)
        polys[i] = Polygon(np.insert(p.points, e + 1, new, axis=0), p.kind)
    elif op is Operator.REMOVE_POINT:
        i = pick(lambda p: len(p) > d.min_points and len(_free_vertices(p, d)) > 0)
        free = _free_vertices(polys[i], d)
        k = int(free[rng.integers(len(free))])
        polys[i] = Polygon(np.delete(polys[i].points, k, axis=0), polys[i].kind)
    elif op is Operator.ADD_POLYGON:
        polys.append(sample_additional_polygon(Structure(polys), d, rng, sampler_config))
    elif op is Operator.REMOVE_POLYGON:
        del polys[pick()]
    return Structure(polys)


def mutate(
    s: Structure,
    d: Domain,
    cfg: MutationConfig,
    rng: np.random.Generator,
    sampler_config: SamplerConfig | None = None,
) -> Structure:
    """One weighted mutation followed by repair.

    Raises:
        MutationFailed: repair gave up; callers replace the individual.
    """
    op = choose_operator(s, d, cfg, rng)
    try:
        raw = apply_operator(op, s, d, cfg, rng, sampler_config)
        return postprocess(raw, d, rng)
    except (RepairFailed, SamplingExhausted) as exc:
        raise MutationFailed(f"{op.value}: {exc}") from exc


def splice(a: Polygon, b: Polygon, cut_a: int, cut_b: int) -> Polygon:
    """Prefix of ``a`` up to ``cut_a`` followed by the suffix of ``b`` from ``cut_b``."""
    return Polygon(np.vstack([a.points[:cut_a], b.points[cut_b:]]), a.kind)


def _splice_cuts(a: Polygon, b: Polygon, d: Domain, rng) -> tuple[int, int]:
    # pinned polylines keep a's first vertex and b's last one
    first = 1 if _pinned(d) else 0
    cut_a = int(rng.integers(first, len(a)))
    # keep the child's vertex count inside [min_points, max_points] when possible
    lo = max(first, cut_a + len(b) - d.max_points)
    hi = min(len(b) - 1, cut_a + len(b) - d.min_points)
    if lo > hi:
        lo = hi = min(max(lo, first), len(b) - 1)
    return cut_a, int(rng.integers(lo, hi + 1))


def _random_subset(n: int, rng, nonempty: bool) -> list[int]:
    while True:
        mask = rng.random(n) < 0.5
        if mask.any() or not nonempty:
            return list(np.flatnonzero(mask))


def crossover(a: Structure, b: Structure, d: Domain, rng: np.random.Generator) -> Structure:
    """Vertex splice for single-polygon parents, polygon exchange otherwise.

    Raises:
        CrossoverFailed: repair gave up; callers fall back to copying ``a``.
    """
    if len(a) == 1 and len(b) == 1:
        cut_a, cut_b = _splice_cuts(a[0], b[0], d, rng)
        child = [splice(a[0], b[0], cut_a, cut_b)]
    else:
        child = [a[i] for i in _random_subset(len(a), rng, nonempty=True)]
        child += [b[i] for i in _random_subset(len(b), rng, nonempty=False)]
        if len(child) > d.max_polygons:
            order = sorted(range(len(child)), key=lambda i: -polygon_length(child[i]))
            child = [child[i] for i in sorted(order[: d.max_polygons])]
    try:
        return postprocess(Structure(child), d, rng)
    except (RepairFailed, SamplingExhausted) as exc:
        raise CrossoverFailed(str(exc)) from exc
