"""Individuals, selection helpers and the shared variation step."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from ..domain import Domain
from ..errors import CrossoverFailed, MutationFailed
from ..evolution import MutationConfig, crossover, mutate
from ..geometry import Structure

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class Individual:
    structure: Structure
    objectives: np.ndarray | None = None
    # SPEA2 scalar fitness, lower is better
    fitness: float = float("nan")

    @property
    def estimated(self) -> bool:
        return self.objectives is not None


def objective_matrix(pop) -> np.ndarray:
    if any(ind.objectives is None for ind in pop):
        raise ValueError("all individuals must be estimated")
    return np.array([np.asarray(ind.objectives, float) for ind in pop]).reshape(len(pop), -1)


def select_k_best(pop: list[Individual], k: int, k_neighbors: int = 0) -> list[Individual]:
    """First ``k`` individuals by objective (m = 1) or SPEA2 fitness (m > 1).

    Sorting is stable, so ties keep insertion order. With m > 1 fitness is
    (re)computed over ``pop`` alone.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not pop:
        return []
    if k > len(pop):
        logger.warning("select_k_best: k=%d exceeds population %d; returning all", k, len(pop))
        k = len(pop)
    y = objective_matrix(pop)
    if y.shape[1] == 1:
        key = y[:, 0]
    else:
        from .spea2 import spea2_assign_fitness

        spea2_assign_fitness(pop, [], k_neighbors or auto_k(len(pop), 0))
        key = np.array([ind.fitness for ind in pop])
    order = np.argsort(key, kind="stable")[:k]
    return [pop[i] for i in order]


def auto_k(population_size: int, archive_size: int) -> int:
    return max(1, int(round(np.sqrt(population_size + archive_size))))


def binary_tournament(pool: list[Individual], key: np.ndarray, count: int, rng) -> list[Individual]:
    """``count`` winners of size-2 tournaments (lower key wins, first drawn on ties)."""
    n = len(pool)
    picks = rng.integers(n, size=(count, 2))
    winners = np.where(key[picks[:, 1]] < key[picks[:, 0]], picks[:, 1], picks[:, 0])
    return [pool[i] for i in winners]


class Variation:
    """Crossover + mutation producing offspring structures from a mating pool.

    A failed crossover copies the first parent; a failed mutation replaces
    the child with a fresh sample from ``sampler``.
    """

    def __init__(self, domain: Domain, sampler, mutation: MutationConfig | None = None,
                 p_crossover: float = 0.7, p_mutation: float = 0.9):
        if not (0 <= p_crossover <= 1 and 0 <= p_mutation <= 1):
            raise ValueError("probabilities must lie in [0, 1]")
        self.domain = domain
        self.sampler = sampler
        self.mutation = mutation or MutationConfig()
        self.p_crossover = p_crossover
        self.p_mutation = p_mutation
        self.failures = {"crossover": 0, "mutation": 0}

    def offspring(self, parents: list[Individual], count: int, rng: np.random.Generator) -> list[Structure]:
        out: list[Structure] = []
        n = len(parents)
        if n == 0:
            return [self.sampler.sample_one(rng) for _ in range(count)]
        for i in range(count):
            a = parents[(2 * i) % n].structure
            b = parents[(2 * i + 1) % n].structure
            child = a
            if rng.random() < self.p_crossover:
                try:
                    child = crossover(a, b, self.domain, rng)
                except CrossoverFailed:
                    self.failures["crossover"] += 1
            if rng.random() < self.p_mutation:
                try:
                    child = mutate(child, self.domain, self.mutation, rng, self.sampler.config)
                except MutationFailed:
                    self.failures["mutation"] += 1
                    child = self.sampler.sample_one(rng)
            out.append(child)
        return out
