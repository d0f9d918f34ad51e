"""One-dimensional Navier-Stokes-Korteweg solver in mass-Lagrangian coordinates."""

from .config import RunConfig, parse_config
from .diagnostics import bd_entropy_report, energy_report, hoff_report, structure_checks
from .errors import ConfigError, DomainError, NSKError, NumericalFailure, StabilityError, VacuumError
from .laws import GeneralLaw, LawBundle, check_hypotheses, make_law, roots_of_capillarity
from .solver import SolverConfig, rhs_effective, rhs_primitive, run, stable_dt, step
from .state import InitialProfile, State, build_grid, init_state, to_eulerian

__version__ = "0.1.0"

__all__ = [
    "RunConfig", "parse_config",
    "bd_entropy_report", "energy_report", "hoff_report", "structure_checks",
    "ConfigError", "DomainError", "NSKError", "NumericalFailure", "StabilityError", "VacuumError",
    "GeneralLaw", "LawBundle", "check_hypotheses", "make_law", "roots_of_capillarity",
    "SolverConfig", "rhs_effective", "rhs_primitive", "run", "stable_dt", "step",
    "InitialProfile", "State", "build_grid", "init_state", "to_eulerian",
]
