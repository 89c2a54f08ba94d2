"""
Finite-volume solver for Poisson-Nernst-Planck systems with size exclusion.
"""

from typing import Final

from .assembly import State
from .config import ExperimentConfig, load_config
from .experiments import build_problem, run_convergence_study, run_longtime_study
from .problem import DiscreteProblem, ProblemSpec, discretize
from .solver import NewtonOptions, newton_step_solve, run_transient
from .steady import SteadyOptions, solve_steady

__version__: Final[str] = "0.1.0"
__all__: Final[list[str]] = [
    "DiscreteProblem",
    "ExperimentConfig",
    "NewtonOptions",
    "ProblemSpec",
    "State",
    "SteadyOptions",
    "build_problem",
    "discretize",
    "load_config",
    "newton_step_solve",
    "run_convergence_study",
    "run_longtime_study",
    "run_transient",
    "solve_steady",
]
