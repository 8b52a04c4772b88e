"""Optimal resource allocation for a fixed service placement.

Local users get their closed-form CPU frequency.  Offloading users share the
uplink band and the edge CPU; their allocation comes from the Lagrange dual
of the rate-constrained problem, maximised with the ellipsoid method, with
primal variables recovered in closed form from the dual point.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .exceptions import SolverFailure
from .model import Allocation, Placement, ProblemInstance, TecReport, UserParams, broadcast_time, evaluate
from .numerics import lambert_w0

__all__ = [
    "DualState",
    "optimal_local_frequency",
    "primal_from_dual",
    "solve_given_placement",
    "ELLIPSOID_RADIUS",
    "ELLIPSOID_STOP_TOL",
]

ELLIPSOID_RADIUS = 1e4
ELLIPSOID_STOP_TOL = 1e-7
_LN2 = math.log(2.0)


@dataclass(frozen=True)
class DualState:
    """Multipliers of the offloading problem.

    ``lam`` maps offloading users to the multiplier of their rate
    constraint; ``mu`` prices uplink bandwidth and ``nu`` edge CPU cycles.
    """

    lam: Mapping[int, float]
    mu: float
    nu: float

    def __post_init__(self):
        if self.mu < 0 or self.nu < 0 or any(v < 0 for v in self.lam.values()):
            raise ValueError("dual variables must be nonnegative")


def optimal_local_frequency(user: UserParams) -> float:
    """Frequency minimising ``beta_T*L/f + beta_E*kappa*f^2*L`` on ``[0, F]``."""
    if user.weight_time == 0.0:
        return 0.0
    if user.weight_energy == 0.0:
        return user.max_local_freq
    return min(user.max_local_freq, (user.weight_time / (2.0 * user.weight_energy * user.energy_coeff)) ** (1.0 / 3.0))


def _upload_weight(user: UserParams) -> float:
    return user.weight_time + user.weight_energy * user.tx_power


def _snr(user: UserParams, instance: ProblemInstance) -> float:
    cfg = instance.config
    return user.tx_power * user.uplink_gain / (cfg.uplink_bandwidth * cfg.noise_psd)


def primal_from_dual(duals: DualState, instance: ProblemInstance, k0: Sequence[int]):
    """Closed-form Lagrangian minimisers for offloading users.

    Returns three dicts ``(tau_u, a, f_c)`` keyed by user.  Multipliers are
    floored at ``1e-12`` so every output is finite.  Users without task bits
    get ``tau_u = a = 0``.
    """
    cfg = instance.config
    floor = 1e-12
    mu = max(duals.mu, floor)
    nu = max(duals.nu, floor)
    tau, a, fc = {}, {}, {}
    for k in k0:
        u = instance.users[k]
        fc[k] = math.sqrt(u.weight_time * u.workload / nu)
        if u.task_bits == 0.0:
            tau[k] = a[k] = 0.0
            continue
        lam = max(duals.lam[k], floor)
        tau[k] = math.sqrt(lam * u.task_bits / _upload_weight(u))
        q = mu * _LN2 / (lam * cfg.uplink_bandwidth)
        w = lambert_w0(-math.exp(-(q + 1.0)))
        a[k] = _snr(u, instance) * (-w) / (1.0 + w)
    return tau, a, fc


def _dual_scales(bits, wcoef, snr, bl, bandwidth, cpu_budget):
    """Rough magnitude of each multiplier, taken from an equal-split allocation."""
    scales = []
    n = bits.size
    if n:
        a0 = 1.0 / n
        rate = bandwidth * a0 * np.log1p(snr / a0) / _LN2
        tau = bits / rate
        lam = tau * tau * wcoef / bits
        mu = lam * bandwidth / _LN2 * (np.log1p(snr / a0) - snr / (a0 + snr))
        scales.extend(lam)
        scales.append(float(np.mean(mu)))
    active = bl > 0
    if active.any():
        f0 = cpu_budget / active.sum()
        scales.append(float(np.mean(bl[active] / (f0 * f0))))
    return np.array(scales, dtype=float)


def _solve_offloading(instance: ProblemInstance, k0: list[int], radius: float, stop_tol: float, max_iter: int | None):
    cfg = instance.config
    users = instance.users
    off = [k for k in k0 if users[k].task_bits > 0]
    bits = np.array([users[k].task_bits for k in off], dtype=float)
    wcoef = np.array([_upload_weight(users[k]) for k in off], dtype=float)
    snr = np.array([_snr(users[k], instance) for k in off], dtype=float)
    bl = np.array([users[k].weight_time * users[k].workload for k in k0], dtype=float)
    bandwidth = cfg.uplink_bandwidth
    budget = cfg.edge_cpu_budget

    scale = _dual_scales(bits, wcoef, snr, bl, bandwidth, budget)
    m = scale.size
    diag = {"dual_dim": m, "ellipsoid_iterations": 0, "restarts": 0}
    lam = np.zeros(len(off))
    mu = nu = 0.0
    if m:
        limit = max_iter if max_iter is not None else 500 * m * m
        r = radius
        for attempt in range(2):
            center, iters, status, gap = _kernels.dual_ascent(
                bits, wcoef, snr, bl, bandwidth, budget, scale, r, stop_tol, limit
            )
            diag["ellipsoid_iterations"] += int(iters)
            if status != _kernels.DEGENERATE or gap <= 10 * stop_tol:
                break
            diag["restarts"] += 1
            r *= 100.0
        diag.update(dual_gap=float(gap), ellipsoid_status=int(status))
        if gap > 10 * stop_tol:
            raise SolverFailure(
                f"ellipsoid stopped with gap {gap:.3g} > {10 * stop_tol:.3g} (status {status})",
                diagnostics=diag,
            )
        duals = np.maximum(center, _kernels._pure.DUAL_FLOOR) * scale
        n = len(off)
        lam = duals[:n]
        mu = float(duals[n]) if n else 0.0
        nu = float(duals[-1]) if np.any(bl > 0) else 0.0

    tau_raw, a_raw, fc_raw = _kernels.primal_map(lam, mu, nu, bits, wcoef, snr, bl, bandwidth)
    a_sum = float(a_raw.sum())
    fc_sum = float(fc_raw.sum())
    rate_raw = _kernels.rate_frac(a_raw, snr, bandwidth)
    diag["raw_bandwidth_residual"] = a_sum - 1.0 if len(off) else 0.0
    diag["raw_cpu_residual"] = (fc_sum - budget) / budget if fc_sum > 0 else 0.0
    diag["raw_rate_residual"] = (
        float(np.max(np.abs(tau_raw * rate_raw - bits) / bits)) if len(off) else 0.0
    )

    # restore feasibility: both budgets are tight at the optimum
    a = a_raw / a_sum if a_sum > 0 else a_raw
    if fc_sum > 0:
        fc = fc_raw * (budget / fc_sum)
    else:
        fc = np.full(len(k0), budget / len(k0))
    rate = _kernels.rate_frac(a, snr, bandwidth)
    tau = bits / rate

    alloc_a = {k: 0.0 for k in k0}
    alloc_tau = {k: 0.0 for k in k0}
    alloc_a.update(zip(off, a.tolist()))
    alloc_tau.update(zip(off, tau.tolist()))
    alloc_fc = dict(zip(k0, fc.tolist()))
    diag["duals"] = DualState(dict(zip(off, lam.tolist())), mu, nu)
    return alloc_a, alloc_tau, alloc_fc, diag


def solve_given_placement(
    instance: ProblemInstance,
    placement: Placement,
    *,
    radius: float = ELLIPSOID_RADIUS,
    stop_tol: float = ELLIPSOID_STOP_TOL,
    max_iter: int | None = None,
) -> TecReport:
    """Minimum-TEC allocation for the users in ``placement.k1`` computing locally.

    Raises
    ------
    SolverFailure
        If the ellipsoid method ends with a suboptimality bound above
        ``10 * stop_tol``.
    """
    start = time.perf_counter()
    n = instance.size
    k1 = placement.local()
    k0 = placement.k0(n)
    f_local = {k: optimal_local_frequency(instance.users[k]) for k in k1}
    tau0 = broadcast_time(instance.config, placement, instance.users)
    if k0:
        a, tau_u, fc, diag = _solve_offloading(instance, k0, radius, stop_tol, max_iter)
    else:
        a, tau_u, fc, diag = {}, {}, {}, {"dual_dim": 0, "ellipsoid_iterations": 0}
    alloc = Allocation(local_freq=f_local, bandwidth_frac=a, offload_time=tau_u, edge_freq=fc, broadcast_time=tau0)
    report = evaluate(instance, placement, alloc)
    diag.update(inner_solves=1, wall_time=time.perf_counter() - start, backend=_kernels.BACKEND)
    return report.with_diagnostics(**diag)
