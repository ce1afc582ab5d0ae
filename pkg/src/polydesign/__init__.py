"""Generative design of two-dimensional polygonal structures.

Sample candidate structures inside a constrained domain, score them with
pluggable estimators, and improve them with evolutionary optimizers.
"""

from .design import DesignConfig, DesignResult, EpochRecord, Mode, PassThroughOptimizer, Toolkit, run_design
from .domain import Domain, ValidationReport, Violation, ViolationKind, is_valid, postprocess, validate
from .errors import (
    ConfigError,
    CrossoverFailed,
    EstimatorContractViolation,
    MutationFailed,
    PolydesignError,
    RepairFailed,
    SamplingExhausted,
)
from .estimators import (
    CompositeEstimator,
    Estimator,
    FunctionEstimator,
    ReferenceDistanceEstimator,
    RoadCostEstimator,
    RoadScenario,
    ShadowWaveEstimator,
    WaveScenario,
)
from .evolution import MutationConfig, Operator, crossover, mutate
from .geometry import Kind, Point, Polygon, Structure, chamfer_distance
from .sampler import SamplerConfig, StandardSampler, sample_batch, sample_structure

__version__ = "0.1.0"
