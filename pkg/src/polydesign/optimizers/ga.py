"""Elitist generational genetic algorithm for single-objective problems."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .base import Individual, Variation, binary_tournament, objective_matrix


@dataclass
class GAConfig:
    population_size: int = 30
    generations: int = 100
    elite: int = 2
    # stop once the best objective is at or below this
    target_value: float | None = None

    def __post_init__(self):
        if self.population_size < 2 or self.generations < 1:
            raise ValueError("need population_size >= 2 and generations >= 1")
        if not 0 <= self.elite < self.population_size:
            raise ValueError("elite must lie in [0, population_size)")


class GeneticOptimizer:
    """Size-2 tournament, crossover/mutation via ``variation``, elites copied unchanged."""

    def __init__(self, variation: Variation, elite: int = 2):
        self.variation = variation
        self.elite = elite

    def optimize(self, population: list[Individual], count: int, rng):
        y = objective_matrix(population)
        if y.shape[1] != 1:
            raise ValueError("the genetic optimizer handles a single objective")
        key = y[:, 0]
        order = np.argsort(key, kind="stable")
        n_elite = min(self.elite, count, len(population))
        elites = [population[i].structure for i in order[:n_elite]]
        pool = binary_tournament(population, key, 2 * (count - n_elite), rng)
        return elites + self.variation.offspring(pool, count - n_elite, rng)


@dataclass
class GAResult:
    best: Individual
    # best-so-far objective per generation
    trace: list[float] = field(default_factory=list)
    generations: int = 0


def ga_run(sampler, estimator, variation: Variation, cfg: GAConfig, rng) -> GAResult:
    """Run the GA from a fresh sampled population."""
    opt = GeneticOptimizer(variation, cfg.elite)
    structures = sampler.sample(cfg.population_size, rng)
    best: Individual | None = None
    trace: list[float] = []
    gen = 0
    for gen in range(cfg.generations):
        objs = estimator.estimate(structures)
        pop = [Individual(s, o) for s, o in zip(structures, objs)]
        i = int(np.argmin([ind.objectives[0] for ind in pop]))
        if best is None or pop[i].objectives[0] < best.objectives[0]:
            best = pop[i]
        trace.append(float(best.objectives[0]))
        if gen == cfg.generations - 1:
            break
        if cfg.target_value is not None and best.objectives[0] <= cfg.target_value:
            break
        structures = opt.optimize(pop, cfg.population_size, rng)
    return GAResult(best, trace, gen + 1)
