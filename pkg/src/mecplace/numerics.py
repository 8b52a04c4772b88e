"""Numerical building blocks: Lambert W, 1-D convex minimisation, ellipsoid method."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from . import _kernels
from .exceptions import DegenerateCut, DomainError

__all__ = [
    "lambert_w0",
    "Bracket",
    "bisect_increasing",
    "minimize_scalar_convex",
    "EllipsoidState",
    "Cut",
    "EllipsoidResult",
    "ellipsoid_step",
    "ellipsoid_maximize",
]

_BRANCH_POINT = -math.exp(-1.0)
_DOMAIN_SLACK = 1e-12


def lambert_w0(x: float) -> float:
    """Principal branch of the Lambert W function on ``[-1/e, 0]``.

    Halley iteration seeded by the branch-point series near ``-1/e`` and by
    ``log1p(x)`` elsewhere.

    Raises
    ------
    DomainError
        If ``x`` lies outside ``[-1/e, 0]`` by more than ``1e-12``.
    """
    x = float(x)
    if not (_BRANCH_POINT - _DOMAIN_SLACK <= x <= _DOMAIN_SLACK):
        raise DomainError(f"lambert_w0 needs x in [-1/e, 0], got {x!r}")
    return _kernels.lambert_w0(min(x, 0.0))


@dataclass(frozen=True)
class Bracket:
    lo: float
    hi: float
    tolerance: float = 1e-12

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ValueError(f"empty bracket [{self.lo}, {self.hi}]")
        if not self.tolerance > 0:
            raise ValueError("bracket tolerance must be positive")


def bisect_increasing(fn: Callable[[float], float], bracket: Bracket, max_iter: int = 400) -> float:
    """Sign change of a non-decreasing ``fn`` inside ``bracket``.

    Returns ``bracket.lo`` if ``fn(lo) >= 0`` and ``bracket.hi`` if
    ``fn(hi) <= 0``.
    """
    lo, hi = bracket.lo, bracket.hi
    if fn(lo) >= 0:
        return lo
    if fn(hi) <= 0:
        return hi
    for _ in range(max_iter):
        if hi - lo <= bracket.tolerance:
            break
        mid = 0.5 * (lo + hi)
        if fn(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def minimize_scalar_convex(derivative: Callable[[float], float], bracket: Bracket) -> float:
    """Minimiser of a convex function on ``bracket`` given its derivative."""
    return bisect_increasing(derivative, bracket)


@dataclass(frozen=True)
class EllipsoidState:
    """Ellipsoid ``{x : (x-c)' P^{-1} (x-c) <= 1}``."""

    center: np.ndarray
    shape_matrix: np.ndarray
    iteration: int = 0

    @classmethod
    def ball(cls, center, radius: float) -> "EllipsoidState":
        center = np.array(center, dtype=float)
        return cls(center, np.eye(center.size) * radius**2)

    @property
    def dim(self) -> int:
        return self.center.size


class Cut(NamedTuple):
    vector: np.ndarray
    feasibility: bool = False


@dataclass
class EllipsoidResult:
    point: np.ndarray
    state: EllipsoidState
    iterations: int
    converged: bool
    gap: float
    restarts: int = 0


def ellipsoid_step(state: EllipsoidState, g) -> EllipsoidState:
    """Central-cut update keeping the half-ellipsoid ``{x : g'(x - c) <= 0}``."""
    g = np.asarray(g, dtype=float)
    P = state.shape_matrix
    m = state.dim
    Pg = P @ g
    gPg = float(g @ Pg)
    if not gPg > 0.0:
        raise DegenerateCut(f"g'Pg = {gPg!r} at iteration {state.iteration}")
    Pg /= math.sqrt(gPg)
    if m == 1:
        return EllipsoidState(state.center - 0.5 * Pg, P * 0.25, state.iteration + 1)
    center = state.center - Pg / (m + 1.0)
    P_new = (m * m / (m * m - 1.0)) * (P - (2.0 / (m + 1.0)) * np.outer(Pg, Pg))
    P_new = 0.5 * (P_new + P_new.T)
    return EllipsoidState(center, P_new, state.iteration + 1)


def _run(oracle, state: EllipsoidState, stop_tol: float, max_iter: int):
    gap = math.inf
    for _ in range(max_iter):
        cut = oracle(state.center)
        if not isinstance(cut, Cut):
            cut = Cut(np.asarray(cut, dtype=float))
        g = np.asarray(cut.vector, dtype=float)
        if not cut.feasibility:
            gap = math.sqrt(max(float(g @ state.shape_matrix @ g), 0.0))
            if gap <= stop_tol:
                return state, gap, True
        state = ellipsoid_step(state, g)
    return state, gap, False


def ellipsoid_maximize(
    oracle: Callable[[np.ndarray], "Cut | np.ndarray"],
    dim: int,
    init_center=None,
    init_radius: float = 1e4,
    stop_tol: float = 1e-7,
    max_iter: int | None = None,
    restart: bool = True,
) -> EllipsoidResult:
    """Maximise a concave function with the central-cut ellipsoid method.

    ``oracle(x)`` returns either a :class:`Cut` with ``feasibility=True``
    (a vector ``g`` such that the feasible set lies in ``g'(y - x) <= 0``) or a
    subgradient of the *negated* objective at ``x``.  Iteration stops once
    ``sqrt(g'Pg) <= stop_tol`` for an objective cut, which bounds the
    remaining suboptimality.

    On :class:`DegenerateCut` the run restarts once from the initial centre
    with a radius 100 times larger.
    """
    if init_center is None:
        init_center = np.ones(dim)
    if max_iter is None:
        max_iter = 500 * dim * dim
    radius = init_radius
    attempts = 2 if restart else 1
    for attempt in range(attempts):
        state = EllipsoidState.ball(init_center, radius)
        try:
            state, gap, converged = _run(oracle, state, stop_tol, max_iter)
        except DegenerateCut:
            if attempt + 1 == attempts:
                raise
            radius *= 100.0
            continue
        return EllipsoidResult(state.center.copy(), state, state.iteration, converged, gap, attempt)
    raise AssertionError("unreachable")
