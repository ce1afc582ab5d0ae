"""Strength Pareto evolutionary algorithm (SPEA2)."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist

from .base import Individual, Variation, auto_k, binary_tournament, objective_matrix
from .pareto import domination_matrix, hypervolume_2d, pareto_front

logger = logging.getLogger(__name__)


@dataclass
class Spea2Config:
    population_size: int = 30
    archive_size: int = 15
    max_steps: int = 50
    # 0 selects round(sqrt(M + N))
    k_neighbors: int = 0
    # keep archive hypervolume non-decreasing (2 objectives only)
    monotone_archive: bool = True

    def __post_init__(self):
        if self.population_size < 2 or self.archive_size < 1 or self.max_steps < 1:
            raise ValueError("need population_size >= 2, archive_size >= 1, max_steps >= 1")
        if self.k_neighbors < 0:
            raise ValueError("k_neighbors must be >= 0")

    @property
    def k(self) -> int:
        return self.k_neighbors or auto_k(self.population_size, self.archive_size)


def _finite(y: np.ndarray) -> np.ndarray:
    """Replace +/-inf sentinels by values just beyond the finite range."""
    if np.all(np.isfinite(y)):
        return y
    finite = y[np.isfinite(y)]
    span = (np.abs(finite).max() if finite.size else 1.0) + 1.0
    return np.nan_to_num(y, posinf=10 * span, neginf=-10 * span)


@dataclass
class FitnessTerms:
    strength: np.ndarray
    raw: np.ndarray
    density: np.ndarray

    @property
    def fitness(self) -> np.ndarray:
        return self.raw + self.density


def fitness_terms(objs, k: int) -> FitnessTerms:
    """Strength S, raw fitness R and density D for an objective matrix."""
    y = np.asarray(objs, float)
    n = len(y)
    dom = domination_matrix(y)
    strength = dom.sum(axis=1)
    raw = (dom * strength[:, None]).sum(axis=0).astype(float)
    if n == 1:
        density = np.array([0.5])
    else:
        dist = cdist(_finite(y), _finite(y))
        np.fill_diagonal(dist, np.inf)
        kth = min(max(k, 1), n - 1)
        d_k = np.partition(dist, kth - 1, axis=1)[:, kth - 1]
        density = 1.0 / (d_k + 2.0)
    return FitnessTerms(strength, raw, density)


def spea2_assign_fitness(pop: list[Individual], arch: list[Individual], k: int) -> FitnessTerms:
    """Write F = R + D into every individual of ``pop + arch``."""
    union = list(pop) + list(arch)
    terms = fitness_terms(objective_matrix(union), k)
    for ind, f in zip(union, terms.fitness):
        ind.fitness = float(f)
    return terms


def _truncate(cands: list[Individual], target: int) -> list[Individual]:
    """Drop the most crowded member until ``target`` remain.

    Crowding compares sorted nearest-neighbour distance vectors
    lexicographically; the smallest vector goes first.
    """
    keep = list(range(len(cands)))
    y = _finite(objective_matrix(cands))
    full = cdist(y, y)
    while len(keep) > target:
        sub = full[np.ix_(keep, keep)]
        np.fill_diagonal(sub, np.inf)
        sub.sort(axis=1)
        # lexsort uses the last key as primary
        victim = np.lexsort(sub.T[::-1])[0]
        del keep[int(victim)]
    return [cands[i] for i in keep]


def environmental_selection(pop: list[Individual], arch: list[Individual], target_size: int) -> list[Individual]:
    """Next archive from ``pop + arch`` (fitness must already be assigned)."""
    union = list(pop) + list(arch)
    fit = np.array([ind.fitness for ind in union])
    if np.any(np.isnan(fit)):
        raise ValueError("assign fitness before environmental selection")
    nondom = [union[i] for i in np.flatnonzero(fit < 1.0)]
    if len(nondom) > target_size:
        return _truncate(nondom, target_size)
    if len(nondom) < target_size:
        rest = [i for i in np.argsort(fit, kind="stable") if fit[i] >= 1.0]
        nondom += [union[i] for i in rest[: target_size - len(nondom)]]
    return nondom


def preserve_hypervolume(new_arch, old_arch, union, target_size, ref) -> list[Individual]:
    """Guarantee the archive hypervolume never drops between steps.

    If density truncation discarded hypervolume held by the previous archive,
    rebuild from each old member (or a union member dominating it) and top
    up in the order of the truncated archive.
    """
    if not old_arch:
        return new_arch
    hv_old = hypervolume_2d(objective_matrix(old_arch), ref)
    if hypervolume_2d(objective_matrix(new_arch), ref) >= hv_old:
        return new_arch
    y_union = objective_matrix(union)
    dom = domination_matrix(y_union)
    index = {id(ind): i for i, ind in enumerate(union)}
    front = set(pareto_front(y_union))
    chosen: list[int] = []
    for ind in old_arch:
        i = index[id(ind)]
        if i not in front:
            i = next(j for j in sorted(front) if dom[j, i])
        if i not in chosen:
            chosen.append(i)
    for ind in new_arch:
        if len(chosen) >= target_size:
            break
        i = index[id(ind)]
        if i not in chosen:
            chosen.append(i)
    logger.debug("archive rebuilt to keep hypervolume monotone")
    return [union[i] for i in chosen[:target_size]]


def default_reference_point(objs) -> np.ndarray:
    """Componentwise max, pushed 10% outward."""
    y = _finite(np.asarray(objs, float))
    top = y.max(axis=0)
    return top + 0.1 * np.abs(top) + 1e-12


class SPEA2:
    """SPEA2 as a stateful optimizer: each call advances the archive by one step."""

    def __init__(self, variation: Variation, archive_size: int = 15, k_neighbors: int = 0,
                 reference_point=None, monotone_archive: bool = True):
        self.variation = variation
        self.archive_size = archive_size
        self.k_neighbors = k_neighbors
        self.reference_point = None if reference_point is None else np.asarray(reference_point, float)
        self.monotone_archive = monotone_archive
        self.archive: list[Individual] = []
        self._observed: tuple[list, list] | None = None

    def observe(self, population: list[Individual]) -> list[Individual]:
        """Update the archive once per population; repeated calls are no-ops."""
        if self._observed is not None and self._observed[0] is population:
            return self._observed[1]
        union = self.update_archive(population)
        self._observed = (population, union)
        return union

    def update_archive(self, population: list[Individual]) -> list[Individual]:
        """Fitness assignment and environmental selection over population + archive."""
        union = list(population) + self.archive
        y = objective_matrix(union)
        if self.reference_point is None and y.shape[1] == 2:
            self.reference_point = default_reference_point(objective_matrix(population))
        k = self.k_neighbors or auto_k(len(population), self.archive_size)
        spea2_assign_fitness(population, self.archive, k)
        new = environmental_selection(population, self.archive, self.archive_size)
        if self.monotone_archive and y.shape[1] == 2:
            new = preserve_hypervolume(new, self.archive, union, self.archive_size, self.reference_point)
        self.archive = new
        return union

    def mate(self, union: list[Individual], count: int, rng) -> list:
        key = np.array([ind.fitness for ind in union])
        pool = binary_tournament(union, key, count, rng)
        return self.variation.offspring(pool, count, rng)

    def optimize(self, population: list[Individual], count: int, rng):
        return self.mate(self.observe(population), count, rng)

    def hypervolume(self) -> float | None:
        if not self.archive or self.reference_point is None:
            return None
        return hypervolume_2d(objective_matrix(self.archive), self.reference_point)


@dataclass
class Spea2Result:
    archive: list[Individual]
    trace: list[dict] = field(default_factory=list)
    reference_point: np.ndarray | None = None


def spea2_run(sampler, estimator, variation: Variation, cfg: Spea2Config, rng,
              reference_point=None) -> Spea2Result:
    """Full SPEA2 loop: sample, then (estimate, fitness, archive, mate, vary) per step."""
    opt = SPEA2(variation, cfg.archive_size, cfg.k, reference_point, cfg.monotone_archive)
    structures = sampler.sample(cfg.population_size, rng)
    trace = []
    for step in range(cfg.max_steps):
        objs = estimator.estimate(structures)
        pop = [Individual(s, o) for s, o in zip(structures, objs)]
        union = opt.update_archive(pop)
        trace.append({
            "step": step,
            "hypervolume": opt.hypervolume(),
            "archive_size": len(opt.archive),
            "estimator_calls": estimator.call_counter,
        })
        if step == cfg.max_steps - 1:
            break
        structures = opt.mate(union, cfg.population_size, rng)
    return Spea2Result(opt.archive, trace, opt.reference_point)
