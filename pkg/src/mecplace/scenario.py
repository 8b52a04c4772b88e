"""Random problem instances following the simulation setup.

Channels: free-space path loss times unit-mean exponential (Rayleigh power)
fading.  The downlink fading power is correlated with the uplink one by
mixing the underlying complex Gaussians, which gives an exact Pearson
correlation equal to ``correlation`` between the two exponential powers.

Each user draws from its own generator seeded by ``(rng_seed, user index)``
so user ``k`` is the same whatever ``user_count`` is.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .exceptions import InvalidSpec
from .model import ProblemInstance, SystemConfig, UserParams

__all__ = ["ScenarioSpec", "generate", "mean_channel_gain", "dumps", "loads", "load", "dump"]

SPEED_OF_LIGHT = 3e8


@dataclass(frozen=True)
class ScenarioSpec:
    user_count: int = 10
    distance_m: float | tuple[float, ...] = 150.0
    program_size: float = 32e6
    homogeneous: bool = True
    task_bits: float = 8e6
    task_bits_min: float = 1e6
    task_bits_max: float = 12e6
    cycles_per_bit: float = 1000.0
    beta_T: float = 0.1
    correlation: float = 0.75
    rng_seed: int = 0
    uplink_bandwidth: float = 2e6
    downlink_bandwidth: float = 2e6
    noise_psd: float = 10 ** (-20.4)
    ap_power: float = 1.0
    edge_cpu_budget: float = 20e9
    max_local_freq: float = 1e9
    energy_coeff: float = 1e-28
    tx_power: float = 0.1
    rx_power: float = 0.01
    antenna_gain: float = 4.11
    carrier_freq: float = 915e6
    path_loss_exponent: float = 3.4

    def __post_init__(self):
        if isinstance(self.distance_m, (list, tuple)):
            object.__setattr__(self, "distance_m", tuple(float(d) for d in self.distance_m))
        if self.user_count < 1:
            raise InvalidSpec("user_count must be at least 1")
        if any(d <= 0 for d in self.distances()):
            raise InvalidSpec("distances must be positive")
        if isinstance(self.distance_m, tuple) and len(self.distance_m) != self.user_count:
            raise InvalidSpec("distance_m list must have one entry per user")
        if self.cycles_per_bit < 0:
            raise InvalidSpec("cycles_per_bit must be nonnegative")
        if not 0.0 <= self.beta_T <= 1.0:
            raise InvalidSpec("beta_T must lie in [0, 1]")
        if not 0.0 <= self.correlation <= 1.0:
            raise InvalidSpec("correlation must lie in [0, 1]")
        if not self.homogeneous and not 0 <= self.task_bits_min <= self.task_bits_max:
            raise InvalidSpec("need 0 <= task_bits_min <= task_bits_max")

    def distances(self) -> tuple[float, ...]:
        if isinstance(self.distance_m, tuple):
            return self.distance_m
        return (float(self.distance_m),) * self.user_count

    def with_(self, **changes) -> "ScenarioSpec":
        return replace(self, **changes)


def mean_channel_gain(distance: float, antenna_gain=4.11, carrier_freq=915e6, exponent=3.4) -> float:
    """Average power gain ``G * (c / (4 pi f0 d)) ** d_e``."""
    return antenna_gain * (SPEED_OF_LIGHT / (4.0 * math.pi * carrier_freq * distance)) ** exponent


def _fading_pair(rng: np.random.Generator, correlation: float) -> tuple[float, float]:
    n = rng.standard_normal(4) / math.sqrt(2.0)
    r = math.sqrt(correlation)
    s = math.sqrt(1.0 - correlation)
    up = n[0] * n[0] + n[1] * n[1]
    re = r * n[0] + s * n[2]
    im = r * n[1] + s * n[3]
    return up, re * re + im * im


def fading_samples(count: int, correlation: float, seed: int = 0) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised draw of ``count`` (uplink, downlink) unit-mean fading powers."""
    rng = np.random.default_rng(seed)
    n = rng.standard_normal((count, 4)) / math.sqrt(2.0)
    r, s = math.sqrt(correlation), math.sqrt(1.0 - correlation)
    up = n[:, 0] ** 2 + n[:, 1] ** 2
    down = (r * n[:, 0] + s * n[:, 2]) ** 2 + (r * n[:, 1] + s * n[:, 3]) ** 2
    return up, down


def generate(spec: ScenarioSpec) -> ProblemInstance:
    config = SystemConfig(
        uplink_bandwidth=spec.uplink_bandwidth,
        downlink_bandwidth=spec.downlink_bandwidth,
        noise_psd=spec.noise_psd,
        ap_power=spec.ap_power,
        program_size=spec.program_size,
        edge_cpu_budget=spec.edge_cpu_budget,
    )
    users = []
    for k, d in enumerate(spec.distances()):
        rng = np.random.default_rng([spec.rng_seed, k])
        alpha_up, alpha_down = _fading_pair(rng, spec.correlation)
        u = rng.random()
        if spec.homogeneous:
            bits = spec.task_bits
        else:
            bits = spec.task_bits_min + (spec.task_bits_max - spec.task_bits_min) * u
        gain = mean_channel_gain(d, spec.antenna_gain, spec.carrier_freq, spec.path_loss_exponent)
        users.append(
            UserParams(
                task_bits=bits,
                workload=spec.cycles_per_bit * bits,
                uplink_gain=gain * alpha_up,
                downlink_gain=gain * alpha_down,
                max_local_freq=spec.max_local_freq,
                energy_coeff=spec.energy_coeff,
                tx_power=spec.tx_power,
                rx_power=spec.rx_power,
                weight_time=spec.beta_T,
                weight_energy=1.0 - spec.beta_T,
            )
        )
    return ProblemInstance(config, tuple(users))


# ---------------------------------------------------------------------------
# flat key = value text format

_FIELDS = {f.name: f for f in fields(ScenarioSpec)}


def _format(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _parse(name: str, raw: str):
    default = _FIELDS[name].default
    raw = raw.strip()
    try:
        if name == "distance_m":
            parts = [float(p) for p in raw.split(",") if p.strip()]
            return parts[0] if len(parts) == 1 else tuple(parts)
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "1", "yes"):
                return True
            if low in ("false", "0", "no"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        return float(raw)
    except ValueError:
        raise InvalidSpec(f"bad value for {name}: {raw!r}") from None


def dumps(spec: ScenarioSpec) -> str:
    lines = [f"{name} = {_format(getattr(spec, name))}" for name in _FIELDS]
    return "\n".join(lines) + "\n"


def loads(text: str) -> ScenarioSpec:
    """Parse ``key = value`` lines; ``#`` starts a comment, unknown keys are rejected."""
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidSpec(f"line {lineno}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _FIELDS:
            raise InvalidSpec(f"line {lineno}: unknown key {key!r}")
        values[key] = _parse(key, raw)
    return ScenarioSpec(**values)


def load(path: str | Path) -> ScenarioSpec:
    return loads(Path(path).read_text())


def dump(spec: ScenarioSpec, path: str | Path) -> None:
    Path(path).write_text(dumps(spec))


def seeds(base: int, count: int) -> Sequence[int]:
    return range(base, base + count)
