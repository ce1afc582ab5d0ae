"""Exception types raised across the engine."""


class PolydesignError(Exception):
    """Base class for engine errors."""


class RepairFailed(PolydesignError):
    """Postprocessing could not produce a valid structure within its round limit."""


class SamplingExhausted(PolydesignError):
    """A sampler rejection loop exceeded its attempt cap."""


class MutationFailed(PolydesignError):
    pass


class CrossoverFailed(PolydesignError):
    pass


class EstimatorContractViolation(PolydesignError):
    """A structure handed to an estimator breaks that estimator's preconditions."""


class ConfigError(PolydesignError):
    """Experiment configuration failed schema or cross-field validation."""

    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field
