"""Consensus ADMM over per-user placement and resource subproblems.

Each user keeps local copies ``x``, ``y``, ``z`` of its bandwidth fraction,
edge CPU share and the broadcast time, plus its binary placement ``b``.  The
shared budgets only couple the global copies ``a``, ``f_c``, ``tau_0``, so the
per-user step splits into independent mixed-binary problems and the global
step is a pair of budget projections solved by bisection.

Edge CPU shares (``y`` and ``f_c``) are carried as fractions of the edge
budget, like the bandwidth shares, and times in seconds; the consensus
residuals add these as plain numbers.  Once the iterates settle, the placement ``b`` is fixed and
the allocation is re-solved exactly with
:func:`mecplace.inner.solve_given_placement`.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from . import _kernels
from .baselines import independent_optimization
from .exceptions import NonConvergence
from .inner import optimal_local_frequency, solve_given_placement
from .model import Placement, ProblemInstance, TecReport

__all__ = [
    "AdmmState",
    "AdmmDiagnostics",
    "AdmmProblem",
    "prepare",
    "initial_state",
    "local_step",
    "global_step",
    "multiplier_step",
    "admm_iteration",
    "solve_admm",
    "STEP_SIZE",
    "MAX_ITER",
]

STEP_SIZE = 2.0
MAX_ITER = 2000


class AdmmProblem(NamedTuple):
    """Per-user constants of the local subproblems, in ADMM units."""

    bits: np.ndarray
    wcoef: np.ndarray
    snr: np.ndarray
    bandwidth: float
    cpu_weight: np.ndarray  # beta_T * L / F_c
    local_freq: np.ndarray
    local_cost: np.ndarray  # beta_T*L/f_l + beta_E*kappa*f_l^2*L
    zcoef: np.ndarray  # beta_T + beta_E * p_r
    zmin: np.ndarray  # broadcast time if user k were the weakest receiver
    cpu_budget: float  # edge budget in CPU units
    cpu_unit: float  # Hz per CPU unit
    time_unit: float  # seconds per time unit


@dataclass(frozen=True)
class AdmmState:
    b: np.ndarray
    f_l: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    a: np.ndarray
    f_c: np.ndarray
    tau_0: float
    rho: np.ndarray
    phi: np.ndarray
    varphi: np.ndarray
    c: float = STEP_SIZE
    iteration: int = 0
    psi: float = 0.0
    gamma: float = 0.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("ADMM step size must be positive")


@dataclass
class AdmmDiagnostics:
    absolute_residual: list[float] = field(default_factory=list)
    relative_residual: list[float] = field(default_factory=list)
    objective: list[float] = field(default_factory=list)
    iterations: int = 0
    converged: bool = False
    sigma: float = 0.0

    @property
    def thresholds(self) -> tuple[float, float]:
        return 3.0 * self.sigma, 2.0 * self.sigma


def prepare(instance: ProblemInstance, cpu_unit: float | None = None, time_unit: float = 1.0) -> AdmmProblem:
    """Per-user constants with CPU shares in ``cpu_unit`` Hz and times in ``time_unit`` s.

    ``cpu_unit`` defaults to the edge budget, so edge shares are fractions.
    """
    cfg = instance.config
    cpu_unit = cfg.edge_cpu_budget if cpu_unit is None else cpu_unit
    A = instance.arrays
    f_l = np.array([optimal_local_frequency(u) for u in instance.users])
    with np.errstate(divide="ignore", invalid="ignore"):
        t_loc = np.where(A.workload > 0, A.workload / f_l, 0.0)
    time_term = np.where(A.weight_time > 0, A.weight_time * t_loc, 0.0)
    local_cost = time_term + A.weight_energy * A.energy_coeff * f_l**2 * A.workload
    down_rate = cfg.downlink_bandwidth * np.log2(1.0 + cfg.ap_power * A.downlink_gain / (cfg.noise_psd * cfg.downlink_bandwidth))
    return AdmmProblem(
        bits=A.task_bits,
        wcoef=A.weight_time + A.weight_energy * A.tx_power,
        snr=A.tx_power * A.uplink_gain / (cfg.uplink_bandwidth * cfg.noise_psd),
        bandwidth=cfg.uplink_bandwidth,
        cpu_weight=A.weight_time * A.workload / cpu_unit,
        local_freq=f_l,
        local_cost=local_cost,
        zcoef=(A.weight_time + A.weight_energy * A.rx_power) * time_unit,
        zmin=cfg.program_size / down_rate / time_unit,
        cpu_budget=cfg.edge_cpu_budget / cpu_unit,
        cpu_unit=cpu_unit,
        time_unit=time_unit,
    )


def initial_state(instance: ProblemInstance, c: float = STEP_SIZE, problem: AdmmProblem | None = None) -> AdmmState:
    """Zero multipliers, everyone local, equal shares of both budgets.

    The broadcast time starts at the time needed to reach the weakest user
    among those that would compute locally given equal shares (the median
    user if there are none).  Starting from the weakest user overall can
    leave every user offloading, and offloading users exert no pull on the
    broadcast time, so the iteration never leaves that point.
    """
    p = problem or prepare(instance)
    n = instance.size
    share = np.full(n, 1.0 / n)
    cpu_share = np.full(n, p.cpu_budget / n)
    k1 = sorted(independent_optimization(instance).placement.k1)
    tau0 = float(np.max(p.zmin[k1])) if k1 else float(np.median(p.zmin))
    return AdmmState(
        b=np.ones(n, dtype=np.int64),
        f_l=p.local_freq.copy(),
        x=share.copy(),
        y=cpu_share.copy(),
        z=np.full(n, tau0),
        a=share.copy(),
        f_c=cpu_share,
        tau_0=tau0,
        rho=np.zeros(n),
        phi=np.zeros(n),
        varphi=np.zeros(n),
        c=c,
    )


def local_step(state: AdmmState, instance: ProblemInstance, problem: AdmmProblem | None = None) -> AdmmState:
    """Solve every user's two branch problems and keep the cheaper branch."""
    p = problem or prepare(instance)
    b, x, y, z, _ = _kernels.admm_local(
        state.a, state.f_c, state.tau_0, state.rho, state.phi, state.varphi, state.c,
        p.bits, p.wcoef, p.snr, p.bandwidth, p.cpu_weight, p.local_cost, p.zcoef, p.zmin,
    )
    return replace(state, b=b, f_l=p.local_freq.copy(), x=x, y=y, z=z)


def global_step(state: AdmmState, instance: ProblemInstance, problem: AdmmProblem | None = None) -> AdmmState:
    """Project the shifted local copies onto the budgets.

    ``a = (x + (rho - psi)/c)^+`` with the smallest ``psi >= 0`` giving
    ``sum(a) <= 1``; likewise for the CPU shares, and ``tau_0`` is the
    clipped average of ``z + varphi/c``.
    """
    p = problem or prepare(instance)
    c = state.c
    cap_a = c * (float(np.max(state.x)) + float(np.max(np.abs(state.rho))) / c)
    cap_f = c * (float(np.max(state.y)) + float(np.max(np.abs(state.phi))) / c)
    a, psi = _kernels.capped_shift(state.x + state.rho / c, c, 1.0, max(cap_a, 1e-12))
    f_c, gamma = _kernels.capped_shift(state.y + state.phi / c, c, p.cpu_budget, max(cap_f, 1e-12))
    tau0 = max(0.0, float(np.mean(state.z) + np.mean(state.varphi) / c))
    return replace(state, a=a, f_c=f_c, tau_0=tau0, psi=float(psi), gamma=float(gamma))


def multiplier_step(state: AdmmState) -> AdmmState:
    c = state.c
    return replace(
        state,
        rho=state.rho + c * (state.x - state.a),
        phi=state.phi + c * (state.y - state.f_c),
        varphi=state.varphi + c * (state.z - state.tau_0),
        iteration=state.iteration + 1,
    )


def admm_iteration(state: AdmmState, instance: ProblemInstance, problem: AdmmProblem | None = None) -> AdmmState:
    p = problem or prepare(instance)
    return multiplier_step(global_step(local_step(state, instance, p), instance, p))


def _local_objective(state: AdmmState, p: AdmmProblem) -> float:
    local = p.local_cost + p.zcoef * state.z
    rate = _kernels.rate_frac(state.x, p.snr, p.bandwidth)
    with np.errstate(divide="ignore", invalid="ignore"):
        upload = np.where(p.bits > 0, p.wcoef * p.bits / rate, 0.0)
        compute = np.where(p.cpu_weight > 0, p.cpu_weight / state.y, 0.0)
    return float(np.sum(np.where(state.b == 1, local, upload + compute)))


def solve_admm(
    instance: ProblemInstance,
    c: float = STEP_SIZE,
    max_iter: int = MAX_ITER,
    sigma: float | None = None,
    strict: bool = False,
) -> TecReport:
    """Run ADMM to consensus, then re-solve the allocation for the final placement.

    Stops when the consensus residual drops below ``3*sigma`` and the change
    in the global copies below ``2*sigma`` (``sigma = 0.0005*K`` by default).
    If residuals are still above ten times those thresholds at ``max_iter``
    the report is flagged with ``nonconvergence=True``; with ``strict`` a
    :class:`NonConvergence` is raised instead.
    """
    start = time.perf_counter()
    n = instance.size
    p = prepare(instance)
    state = initial_state(instance, c, p)
    diag = AdmmDiagnostics(sigma=0.0005 * n if sigma is None else sigma)
    abs_tol, rel_tol = diag.thresholds
    abs_res = rel_res = math.inf
    for _ in range(max_iter):
        prev = state
        state = admm_iteration(state, instance, p)
        abs_res = float(
            np.sum(np.abs(state.x - state.a) + np.abs(state.y - state.f_c) + np.abs(state.z - state.tau_0))
        )
        rel_res = abs(state.tau_0 - prev.tau_0) + float(
            np.sum(np.abs(state.a - prev.a) + np.abs(state.f_c - prev.f_c))
        )
        diag.absolute_residual.append(abs_res)
        diag.relative_residual.append(rel_res)
        diag.objective.append(_local_objective(state, p))
        if abs_res < abs_tol and rel_res < rel_tol:
            diag.converged = True
            break
    diag.iterations = state.iteration
    admm_time = time.perf_counter() - start
    failed = not diag.converged and (abs_res > 10 * abs_tol or rel_res > 10 * rel_tol)
    if failed and strict:
        raise NonConvergence(
            f"ADMM residuals {abs_res:.3g}/{rel_res:.3g} after {state.iteration} iterations",
            diagnostics={"admm": diag, "state": state},
        )

    report = solve_given_placement(instance, Placement.from_bits(state.b))
    return report.with_diagnostics(
        method="admm",
        admm=diag,
        admm_state=state,
        iterations=diag.iterations,
        nonconvergence=failed,
        admm_time=admm_time,
        wall_time=time.perf_counter() - start,
    )
