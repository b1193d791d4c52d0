"""Dense SQP solver and the three problem builders built on it."""

from .core import (
    KKTResult,
    NLProblem,
    SolverConfig,
    solve,
    solve_qp,
)
from .builders import (
    CollocationGrid,
    OracleResult,
    build_drto,
    build_ss_econ,
    build_ss_fit,
    brute_force_ss_oracle,
    fit_measurements,
    project_u_plan,
    simulate_collocation,
)

__all__ = [
    "KKTResult",
    "NLProblem",
    "SolverConfig",
    "solve",
    "solve_qp",
    "CollocationGrid",
    "OracleResult",
    "build_drto",
    "build_ss_econ",
    "build_ss_fit",
    "brute_force_ss_oracle",
    "fit_measurements",
    "project_u_plan",
    "simulate_collocation",
]
