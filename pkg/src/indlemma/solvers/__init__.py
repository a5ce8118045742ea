"""External solver processes: presets, single runs and portfolios."""

from .config import (
    DEFAULT_BACKEND,
    DEFAULT_FILTER,
    PRESETS,
    SolverConfig,
    SpawnFailure,
    available,
    load_solver_file,
    load_solver_table,
    select,
)
from .runner import (
    InconsistentVerdicts,
    Outcome,
    SolverVerdict,
    parse_verdict,
    run_portfolio,
    run_solver,
    set_process_limit,
    solver_version,
)

__all__ = [
    "DEFAULT_BACKEND", "DEFAULT_FILTER", "InconsistentVerdicts", "Outcome", "PRESETS",
    "SolverConfig", "SolverVerdict", "SpawnFailure", "available", "load_solver_file",
    "load_solver_table", "parse_verdict", "run_portfolio", "run_solver", "select",
    "set_process_limit", "solver_version",
]
