# experiment harness: convergence tables, complexity traces, evolutions
from .complexity import complexity_study, manufactured_solution, manufactured_start
from .config import ExperimentConfig, load_config
from .convergence import RateTableRow, cauchy_convergence, interpolate_coarse_to_fine
from .evolution import evolve

__all__ = [
    "complexity_study",
    "manufactured_solution",
    "manufactured_start",
    "ExperimentConfig",
    "load_config",
    "RateTableRow",
    "cauchy_convergence",
    "interpolate_coarse_to_fine",
    "evolve",
]
