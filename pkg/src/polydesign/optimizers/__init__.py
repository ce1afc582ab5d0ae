from .base import Individual, Variation, auto_k, binary_tournament, objective_matrix, select_k_best
from .ga import GAConfig, GAResult, GeneticOptimizer, ga_run
from .pareto import domination_matrix, dominates, hypervolume_2d, pareto_front
from .spea2 import (
    SPEA2,
    FitnessTerms,
    Spea2Config,
    Spea2Result,
    default_reference_point,
    environmental_selection,
    fitness_terms,
    spea2_assign_fitness,
    spea2_run,
)

__all__ = [
    "Individual", "Variation", "auto_k", "binary_tournament", "objective_matrix", "select_k_best",
    "GAConfig", "GAResult", "GeneticOptimizer", "ga_run",
    "domination_matrix", "dominates", "hypervolume_2d", "pareto_front",
    "SPEA2", "FitnessTerms", "Spea2Config", "Spea2Result", "default_reference_point",
    "environmental_selection", "fitness_terms", "spea2_assign_fitness", "spea2_run",
]
