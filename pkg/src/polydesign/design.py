"""The sample -> estimate -> select -> optimize design loop."""

from __future__ import annotations

import enum
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .domain import Domain
from .geometry import Structure
from .optimizers import Individual, hypervolume_2d, objective_matrix, pareto_front, select_k_best
from .optimizers.spea2 import default_reference_point

logger = logging.getLogger(__name__)

# stream purposes for per-epoch random generators
_INIT, _OPTIMIZE, _SAMPLE = 0, 1, 2


class Mode(str, enum.Enum):
    TRADITIONAL = "traditional"
    EXTRA_SAMPLING = "extra_sampling"
    RANDOM_SEARCH = "random_search"


@dataclass
class DesignConfig:
    mode: Mode = Mode.TRADITIONAL
    population_size: int = 30
    k_select: int | None = None
    max_epochs: int = 20
    time_budget_s: float | None = None
    target_value: float | None = None
    seed: int = 0
    workers: int = 1
    reference_point: tuple[float, ...] | None = None

    def __post_init__(self):
        self.mode = Mode(self.mode)
        if self.k_select is None:
            self.k_select = max(1, self.population_size // 2)
        if self.population_size < 1:
            raise ValueError("population_size must be >= 1")
        if not 1 <= self.k_select <= self.population_size:
            raise ValueError("k_select must lie in [1, population_size]")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")


@dataclass
class Toolkit:
    """Sampler, estimator and (optional) optimizer bound for one run.

    The optimizer must expose ``optimize(individuals, count, rng)``
    returning ``count`` structures.
    """

    sampler: object
    estimator: object
    optimizer: object | None = None


class PassThroughOptimizer:
    """Returns the selected structures unchanged (optimisation disabled)."""

    def optimize(self, population, count, rng):
        return [ind.structure for ind in population[:count]]


@dataclass
class EpochRecord:
    epoch: int
    best_objectives: list[float]
    hypervolume: float | None
    estimator_calls: int
    structures: list[Structure] = field(default_factory=list)


@dataclass
class DesignResult:
    designs: list[Individual]
    records: list[EpochRecord]
    reference_point: np.ndarray | None = None
    stop_reason: str = "max_epochs"


def _rng(seed: int, purpose: int, epoch: int) -> np.random.Generator:
    return np.random.default_rng([seed, purpose, epoch])


def run_design(
    tk: Toolkit,
    d: Domain,
    cfg: DesignConfig,
    writer: Callable[[EpochRecord], None] | None = None,
) -> DesignResult:
    """Run the design loop in ``cfg.mode``.

    Each epoch estimates the whole population and keeps the ``k_select``
    best. Traditional refills the population through the optimizer only;
    extra sampling lets the optimizer produce ``k_select`` structures and
    tops up with fresh samples; random search keeps the selection and tops
    up with fresh samples.

    Records are handed to ``writer`` as soon as they exist. If the loop
    raises, the exception carries ``partial_records``.
    """
    if cfg.mode is not Mode.RANDOM_SEARCH and tk.optimizer is None:
        raise ValueError(f"mode {cfg.mode.value} needs an optimizer")
    records: list[EpochRecord] = []
    ref = None if cfg.reference_point is None else np.asarray(cfg.reference_point, float)
    start = time.perf_counter()
    stop_reason = "max_epochs"
    pool = ThreadPoolExecutor(cfg.workers) if cfg.workers > 1 else None
    k = cfg.k_select
    try:
        structures = tk.sampler.sample(cfg.population_size, _rng(cfg.seed, _INIT, 0))
        selected: list[Individual] = []
        for epoch in range(cfg.max_epochs):
            objs = tk.estimator.estimate(structures, pool)
            pop = [Individual(s, o) for s, o in zip(structures, objs)]
            m = objs.shape[1]
            if m >= 2 and ref is None:
                ref = default_reference_point(objs)
            if m >= 2 and getattr(tk.optimizer, "reference_point", False) is None:
                tk.optimizer.reference_point = ref
            selected = select_k_best(pop, k)
            rec = EpochRecord(
                epoch=epoch,
                best_objectives=[float(v) for v in selected[0].objectives],
                hypervolume=_hypervolume(selected, ref, tk.optimizer, cfg.mode) if m >= 2 else None,
                estimator_calls=int(tk.estimator.call_counter),
                structures=list(structures),
            )
            records.append(rec)
            if writer is not None:
                writer(rec)
            if epoch == cfg.max_epochs - 1:
                break
            if cfg.target_value is not None and selected[0].objectives[0] <= cfg.target_value:
                stop_reason = "target_value"
                break
            if cfg.time_budget_s is not None and time.perf_counter() - start >= cfg.time_budget_s:
                stop_reason = "time_budget"
                break
            opt_rng = _rng(cfg.seed, _OPTIMIZE, epoch)
            smp_rng = _rng(cfg.seed, _SAMPLE, epoch)
            if cfg.mode is Mode.TRADITIONAL:
                structures = tk.optimizer.optimize(selected, cfg.population_size, opt_rng)
            elif cfg.mode is Mode.EXTRA_SAMPLING:
                structures = tk.optimizer.optimize(selected, k, opt_rng)
                structures += tk.sampler.sample(cfg.population_size - k, smp_rng)
            else:
                structures = [ind.structure for ind in selected]
                structures += tk.sampler.sample(cfg.population_size - k, smp_rng)
    except Exception as exc:
        exc.partial_records = records
        raise
    finally:
        if pool is not None:
            pool.shutdown()
    return DesignResult(selected, records, ref, stop_reason)


def _hypervolume(selected, ref, optimizer, mode: Mode) -> float | None:
    """Archive hypervolume for archive-keeping optimizers, else the selection's front."""
    if mode is not Mode.RANDOM_SEARCH and hasattr(optimizer, "observe"):
        # fold the current selection into the archive before reading it;
        # the following optimize() call reuses this update
        optimizer.observe(selected)
        hv = optimizer.hypervolume()
        if hv is not None:
            return hv
    y = objective_matrix(selected)
    if y.shape[1] != 2:
        return None
    return hypervolume_2d(y[pareto_front(y)], ref)
