"""Joint AI-service placement and resource allocation for mobile edge computing."""
from ._kernels import BACKEND
from .admm import solve_admm
from .baselines import all_edge, independent_optimization
from .exceptions import (
    DegenerateCut,
    DomainError,
    InfeasibleAllocation,
    InstanceTooLarge,
    InvalidSpec,
    MecPlaceError,
    MissingAllocationEntry,
    NonConvergence,
    SolverFailure,
    UnknownMethod,
    UnknownParameter,
)
from .inner import solve_given_placement
from .model import Allocation, Placement, ProblemInstance, SystemConfig, TecReport, UserParams, evaluate
from .placement import exhaustive_search, greedy_search, uplink_heuristic
from .scenario import ScenarioSpec, generate

__all__ = [
    "BACKEND",
    "Allocation",
    "Placement",
    "ProblemInstance",
    "SystemConfig",
    "TecReport",
    "UserParams",
    "evaluate",
    "solve_given_placement",
    "exhaustive_search",
    "greedy_search",
    "uplink_heuristic",
    "solve_admm",
    "all_edge",
    "independent_optimization",
    "ScenarioSpec",
    "generate",
    "MecPlaceError",
    "DomainError",
    "DegenerateCut",
    "SolverFailure",
    "NonConvergence",
    "MissingAllocationEntry",
    "InfeasibleAllocation",
    "InstanceTooLarge",
    "InvalidSpec",
    "UnknownMethod",
    "UnknownParameter",
]
