"""System model: rates, delays, energies and the weighted time-energy cost.

All quantities are in SI units (bits, Hz, W, J, s, cycles/s).  Users are
identified by their position in :attr:`ProblemInstance.users`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .exceptions import InfeasibleAllocation, MissingAllocationEntry

__all__ = [
    "SystemConfig",
    "UserParams",
    "ProblemInstance",
    "Placement",
    "Allocation",
    "TecReport",
    "broadcast_time",
    "uplink_rate",
    "local_energy",
    "evaluate",
    "FEAS_TOL",
]

#: Relative tolerance used when checking budgets and rate constraints.
FEAS_TOL = 1e-6

_LN2 = math.log(2.0)


@dataclass(frozen=True)
class SystemConfig:
    uplink_bandwidth: float = 2e6
    downlink_bandwidth: float = 2e6
    noise_psd: float = 10 ** (-20.4)
    ap_power: float = 1.0
    program_size: float = 32e6
    edge_cpu_budget: float = 20e9

    def __post_init__(self):
        for name in (
            "uplink_bandwidth",
            "downlink_bandwidth",
            "noise_psd",
            "ap_power",
            "program_size",
            "edge_cpu_budget",
        ):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ValueError(f"{name} must be positive and finite, got {value!r}")


@dataclass(frozen=True)
class UserParams:
    """Per-user task, hardware, preference and channel parameters.

    ``weight_energy`` defaults to ``1 - weight_time``.
    """

    task_bits: float
    workload: float
    uplink_gain: float
    downlink_gain: float
    max_local_freq: float = 1e9
    energy_coeff: float = 1e-28
    tx_power: float = 0.1
    rx_power: float = 0.01
    weight_time: float = 0.1
    weight_energy: float | None = None

    def __post_init__(self):
        if self.weight_energy is None:
            object.__setattr__(self, "weight_energy", 1.0 - self.weight_time)
        if self.task_bits < 0 or self.workload < 0:
            raise ValueError("task_bits and workload must be nonnegative")
        for name in (
            "max_local_freq",
            "energy_coeff",
            "tx_power",
            "rx_power",
            "uplink_gain",
            "downlink_gain",
        ):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.weight_time < 0 or self.weight_energy < 0:
            raise ValueError("weights must be nonnegative")
        if abs(self.weight_time + self.weight_energy - 1.0) > 1e-9:
            raise ValueError("weight_time + weight_energy must equal 1")


class UserArrays(NamedTuple):
    """Column view of the user parameters, in user order."""

    task_bits: np.ndarray
    workload: np.ndarray
    max_local_freq: np.ndarray
    energy_coeff: np.ndarray
    tx_power: np.ndarray
    rx_power: np.ndarray
    weight_time: np.ndarray
    weight_energy: np.ndarray
    uplink_gain: np.ndarray
    downlink_gain: np.ndarray


@dataclass(frozen=True)
class ProblemInstance:
    config: SystemConfig
    users: tuple[UserParams, ...]

    def __post_init__(self):
        object.__setattr__(self, "users", tuple(self.users))
        if not self.users:
            raise ValueError("a problem instance needs at least one user")

    @property
    def size(self) -> int:
        return len(self.users)

    @cached_property
    def arrays(self) -> UserArrays:
        return UserArrays(
            *(
                np.array([getattr(u, name) for u in self.users], dtype=float)
                for name in UserArrays._fields
            )
        )

    def with_config(self, **changes) -> "ProblemInstance":
        return ProblemInstance(replace(self.config, **changes), self.users)

    def permuted(self, order: Sequence[int]) -> "ProblemInstance":
        return ProblemInstance(self.config, tuple(self.users[i] for i in order))


@dataclass(frozen=True)
class Placement:
    """Users that receive the program and compute locally (the set K1)."""

    k1: frozenset[int] = frozenset()

    def __post_init__(self):
        object.__setattr__(self, "k1", frozenset(int(k) for k in self.k1))

    @classmethod
    def of(cls, users: Iterable[int]) -> "Placement":
        return cls(frozenset(users))

    @classmethod
    def from_bits(cls, bits: Sequence[int]) -> "Placement":
        return cls(frozenset(k for k, b in enumerate(bits) if b))

    def k0(self, n_users: int) -> list[int]:
        return [k for k in range(n_users) if k not in self.k1]

    def local(self) -> list[int]:
        return sorted(self.k1)

    def bits(self, n_users: int) -> np.ndarray:
        out = np.zeros(n_users, dtype=int)
        out[list(self.k1)] = 1
        return out

    def bitmask(self, n_users: int) -> str:
        """``'1'`` for local users, ``'0'`` for offloaders, user 0 first."""
        return "".join("1" if k in self.k1 else "0" for k in range(n_users))

    def __contains__(self, k) -> bool:
        return k in self.k1

    def __len__(self) -> int:
        return len(self.k1)


@dataclass(frozen=True)
class Allocation:
    local_freq: Mapping[int, float] = field(default_factory=dict)
    bandwidth_frac: Mapping[int, float] = field(default_factory=dict)
    offload_time: Mapping[int, float] = field(default_factory=dict)
    edge_freq: Mapping[int, float] = field(default_factory=dict)
    broadcast_time: float = 0.0


@dataclass(frozen=True)
class TecReport:
    """Per-user breakdown and total objective for one placement/allocation."""

    placement: Placement
    allocation: Allocation
    time: np.ndarray
    energy: np.ndarray
    tec: np.ndarray
    objective: float
    violations: tuple[str, ...] = ()
    diagnostics: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return not self.violations

    @property
    def total_time(self) -> float:
        return float(np.sum(self.time))

    @property
    def total_energy(self) -> float:
        return float(np.sum(self.energy))

    def with_diagnostics(self, **extra) -> "TecReport":
        return replace(self, diagnostics={**self.diagnostics, **extra})


def _spectral_rate(bandwidth: float, snr_numerator: float, noise: float) -> float:
    """``bandwidth * log2(1 + snr_numerator / (bandwidth * noise))`` with 0 at 0."""
    if bandwidth <= 0.0:
        return 0.0
    return bandwidth * math.log1p(snr_numerator / (bandwidth * noise)) / _LN2


def broadcast_time(config: SystemConfig, k1: Placement | Iterable[int], users: Sequence[UserParams]) -> float:
    """Time to multicast the program at the rate supported by the weakest receiver."""
    members = k1.k1 if isinstance(k1, Placement) else frozenset(k1)
    if not members:
        return 0.0
    h_min = min(users[k].downlink_gain for k in members)
    rate = _spectral_rate(config.downlink_bandwidth, config.ap_power * h_min, config.noise_psd)
    return config.program_size / rate


def uplink_rate(a: float, user: UserParams, config: SystemConfig) -> float:
    """FDMA uplink rate for a bandwidth fraction ``a`` (continuous limit 0 at ``a=0``)."""
    if a < 0:
        raise ValueError("bandwidth fraction must be nonnegative")
    return _spectral_rate(a * config.uplink_bandwidth, user.tx_power * user.uplink_gain, config.noise_psd)


def local_energy(user: UserParams, freq: float) -> float:
    return user.energy_coeff * freq * freq * user.workload


def _compute_time(workload: float, freq: float) -> float:
    if workload == 0.0:
        return 0.0
    return workload / freq if freq > 0 else math.inf


def _weighted(weight: float, value: float) -> float:
    # a zero weight neutralises an unbounded term (e.g. f_l = 0 when beta_T = 0)
    return 0.0 if weight == 0.0 else weight * value


def evaluate(
    instance: ProblemInstance,
    placement: Placement,
    allocation: Allocation,
    tol: float = FEAS_TOL,
    strict: bool = False,
) -> TecReport:
    """Compute per-user time, energy and TEC and flag constraint violations.

    Violations never raise unless ``strict`` is set; structurally missing
    entries always raise :class:`MissingAllocationEntry`.
    """
    cfg = instance.config
    n = instance.size
    bad = [k for k in placement.k1 if not 0 <= k < n]
    if bad:
        raise MissingAllocationEntry(f"placement references unknown users {sorted(bad)}")
    tau0 = float(allocation.broadcast_time)
    times = np.zeros(n)
    energies = np.zeros(n)
    tecs = np.zeros(n)
    violations: list[str] = []

    for k, u in enumerate(instance.users):
        if k in placement.k1:
            try:
                f = float(allocation.local_freq[k])
            except KeyError:
                raise MissingAllocationEntry(f"user {k} in K1 has no local_freq") from None
            if f < 0 or f > u.max_local_freq * (1 + tol):
                violations.append(f"user {k}: local_freq {f:.6g} outside [0, {u.max_local_freq:.6g}]")
            t_local = _compute_time(u.workload, f)
            e_local = local_energy(u, f)
            times[k] = tau0 + t_local
            energies[k] = u.rx_power * tau0 + e_local
            tecs[k] = _weighted(u.weight_time, tau0) + _weighted(u.weight_time, t_local) + u.weight_energy * energies[k]
        else:
            try:
                a = float(allocation.bandwidth_frac[k])
                tau_u = float(allocation.offload_time[k])
                fc = float(allocation.edge_freq[k])
            except KeyError as exc:
                raise MissingAllocationEntry(f"user {k} in K0 lacks {exc.args[0]!r} entry") from None
            if a < 0 or tau_u < 0 or fc < 0:
                violations.append(f"user {k}: negative offloading variable")
            elif u.task_bits > 0:
                bits = tau_u * uplink_rate(a, u, cfg)
                if bits < u.task_bits * (1 - tol):
                    violations.append(f"user {k}: uplink delivers {bits:.6g} of {u.task_bits:.6g} bits")
            t_edge = _compute_time(u.workload, fc)
            times[k] = tau_u + t_edge
            energies[k] = u.tx_power * tau_u
            tecs[k] = u.weight_time * tau_u + _weighted(u.weight_time, t_edge) + u.weight_energy * energies[k]

    k0 = placement.k0(n)
    if k0:
        a_sum = sum(float(allocation.bandwidth_frac[k]) for k in k0)
        if a_sum > 1 + tol:
            violations.append(f"bandwidth budget exceeded: sum(a) = {a_sum:.9g}")
        fc_sum = sum(float(allocation.edge_freq[k]) for k in k0)
        if fc_sum > cfg.edge_cpu_budget * (1 + tol):
            violations.append(f"edge CPU budget exceeded: sum(f_c) = {fc_sum:.9g}")
    needed = broadcast_time(cfg, placement, instance.users)
    if tau0 < needed * (1 - tol):
        violations.append(f"broadcast time {tau0:.6g} s shorter than required {needed:.6g} s")

    if strict and violations:
        raise InfeasibleAllocation("; ".join(violations))
    return TecReport(
        placement=placement,
        allocation=allocation,
        time=times,
        energy=energies,
        tec=tecs,
        objective=float(np.sum(tecs)),
        violations=tuple(violations),
    )
