"""Shared instance builders and brute-force oracles for the test suite."""
from __future__ import annotations

import math

import numpy as np
import pytest

from mecplace.model import ProblemInstance, SystemConfig, UserParams
from mecplace.scenario import ScenarioSpec, generate, mean_channel_gain

LN2 = math.log(2.0)
GBAR_150 = mean_channel_gain(150.0)

_ACCEPTANCE_LINES: list[str] = []


def record_outcome(label: str, ok: bool, detail: str) -> str:
    """Remember one PASS/FAIL line for the terminal summary and return it."""
    line = f"{'PASS' if ok else 'FAIL'}  {label}: {detail}"
    _ACCEPTANCE_LINES.append(line)
    print(line)
    return line


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def default_instance(k: int = 10, seed: int = 0, **overrides) -> ProblemInstance:
    return generate(ScenarioSpec(user_count=k, rng_seed=seed, **overrides))


def random_instance(rng: np.random.Generator, k: int, beta_t: float | None = None) -> ProblemInstance:
    """Heterogeneous users with parameters spread around the simulation defaults."""
    users = []
    for _ in range(k):
        bits = rng.uniform(1e6, 12e6)
        bt = rng.uniform(0.05, 0.9) if beta_t is None else beta_t
        users.append(
            UserParams(
                task_bits=bits,
                workload=rng.uniform(200, 2000) * bits,
                uplink_gain=GBAR_150 * rng.exponential(),
                downlink_gain=GBAR_150 * rng.exponential(),
                max_local_freq=rng.uniform(0.5e9, 2e9),
                energy_coeff=1e-28,
                tx_power=rng.uniform(0.05, 0.5),
                rx_power=0.01,
                weight_time=bt,
                weight_energy=1.0 - bt,
            )
        )
    return ProblemInstance(SystemConfig(), tuple(users))


def offload_cost_terms(instance: ProblemInstance, k0):
    """Per-user constants of the offloading objective ``sum w*I/rate(a) + sum beta_T*L/f_c``."""
    cfg = instance.config
    users = [instance.users[k] for k in k0]
    w = np.array([u.weight_time + u.weight_energy * u.tx_power for u in users])
    bits = np.array([u.task_bits for u in users])
    snr = np.array([u.tx_power * u.uplink_gain / (cfg.uplink_bandwidth * cfg.noise_psd) for u in users])
    bl = np.array([u.weight_time * u.workload for u in users])
    return w, bits, snr, bl


def _simplex_grid(dim: int, steps: int) -> np.ndarray:
    """All points of the probability simplex with coordinates on a ``1/steps`` lattice."""
    if dim == 1:
        return np.ones((1, 1))
    if dim == 2:
        t = np.arange(1, steps) / steps
        return np.column_stack([t, 1 - t])
    i, j = np.meshgrid(np.arange(1, steps), np.arange(1, steps), indexing="ij")
    keep = i + j < steps
    a = i[keep] / steps
    b = j[keep] / steps
    return np.column_stack([a, b, 1 - a - b])


def _grid_min(cost, dim: int, steps: int = 400, zooms: int = 3) -> float:
    """Minimum of ``cost`` over the simplex: a lattice scan, then zoomed lattices around the best point."""
    pts = _simplex_grid(dim, steps)
    vals = cost(pts)
    best = pts[np.argmin(vals)]
    best_val = float(np.min(vals))
    width = 4.0 / steps
    for _ in range(zooms):
        if dim == 1:
            break
        offs = np.linspace(-width, width, 81)
        if dim == 2:
            cand = np.column_stack([best[0] + offs, best[1] - offs])
        else:
            di, dj = np.meshgrid(offs, offs, indexing="ij")
            cand = np.column_stack([best[0] + di.ravel(), best[1] + dj.ravel(), best[2] - di.ravel() - dj.ravel()])
        cand = cand[np.all(cand > 0, axis=1)]
        vals = cost(cand)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best, best_val = cand[i], float(vals[i])
        width *= 0.05
    return best_val


def grid_offload_optimum(instance: ProblemInstance, k0) -> float:
    """Brute-force optimum of the offloading part for at most three offloaders.

    The cost with ``tau_u`` at rate equality separates into a bandwidth term
    and an edge-CPU term, each minimised over its own simplex by lattice
    search.
    """
    w, bits, snr, bl = offload_cost_terms(instance, k0)
    cfg = instance.config
    W = cfg.uplink_bandwidth
    F = cfg.edge_cpu_budget

    def band_cost(a):
        rate = W * a * np.log1p(snr / a) / LN2
        return np.sum(w * bits / rate, axis=1)

    def cpu_cost(s):
        return np.sum(bl / (s * F), axis=1)

    return _grid_min(band_cost, len(k0)) + _grid_min(cpu_cost, len(k0))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
