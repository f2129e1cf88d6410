"""K-processes, their finite approximations and the REM-like trap model."""

from .env import (
    TrapDisorder,
    WeightEnv,
    make_geometric_env,
    parse_env_spec,
    sample_subordinator_env,
    sample_trap_disorder,
    scaling_constant,
    truncate_env,
)
from .errors import BudgetError, DomainError, KProcessError, ParameterError, RangeError
from .paths import INF, TAIL, Trajectory

__version__ = "0.1.0"

__all__ = [
    "INF",
    "TAIL",
    "BudgetError",
    "DomainError",
    "KProcessError",
    "ParameterError",
    "RangeError",
    "Trajectory",
    "TrapDisorder",
    "WeightEnv",
    "make_geometric_env",
    "parse_env_spec",
    "sample_subordinator_env",
    "sample_trap_disorder",
    "scaling_constant",
    "truncate_env",
]
