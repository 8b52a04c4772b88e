"""Time the compiled kernels against the pure-Python fallback.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]

Each kernel is fed identical inputs taken from a default scenario; the table
reports the best-of-N time per call and the speed-up of the compiled core.
"""
from __future__ import annotations

import argparse
import timeit

import numpy as np

from mecplace import admm, inner
from mecplace._kernels import _pure
from mecplace.scenario import ScenarioSpec, generate

try:
    from mecplace._kernels import _core
except ImportError:  # extension not built
    _core = None


def _dual_inputs(k: int):
    inst = generate(ScenarioSpec(user_count=k, rng_seed=1))
    A = inst.arrays
    cfg = inst.config
    wcoef = A.weight_time + A.weight_energy * A.tx_power
    snr = A.tx_power * A.uplink_gain / (cfg.uplink_bandwidth * cfg.noise_psd)
    bl = A.weight_time * A.workload
    scale = inner._dual_scales(A.task_bits, wcoef, snr, bl, cfg.uplink_bandwidth, cfg.edge_cpu_budget)
    args = (A.task_bits, wcoef, snr, bl, cfg.uplink_bandwidth, cfg.edge_cpu_budget, scale, 1e4, 1e-7, 500 * scale.size**2)
    return args


def _admm_inputs(k: int):
    inst = generate(ScenarioSpec(user_count=k, rng_seed=1))
    p = admm.prepare(inst)
    st = admm.initial_state(inst, problem=p)
    for _ in range(5):
        st = admm.admm_iteration(st, inst, p)
    local = (st.a, st.f_c, st.tau_0, st.rho, st.phi, st.varphi, st.c,
             p.bits, p.wcoef, p.snr, p.bandwidth, p.cpu_weight, p.local_cost, p.zcoef, p.zmin)
    shift = (st.x + st.rho / st.c + 0.5, st.c, 1.0, 10.0)
    return local, shift


def _best(fn, repeat: int) -> float:
    number = 1
    while timeit.timeit(fn, number=number) < 0.05 and number < 1 << 16:
        number *= 2
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main(argv=None) -> None:
    parser = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)
    if _core is None:
        print("compiled core not available; build it with `pip install -e . --no-build-isolation`")
        return

    cases = []
    for k in (4, 8, 16):
        d = _dual_inputs(k)
        cases.append((f"dual_ascent K={k}", lambda m, d=d: m.dual_ascent(*d)))
    for k in (20, 100):
        local, shift = _admm_inputs(k)
        cases.append((f"admm_local K={k}", lambda m, a=local: m.admm_local(*a)))
        cases.append((f"capped_shift K={k}", lambda m, a=shift: m.capped_shift(*a)))

    print(f"{'kernel':<22}{'python [ms]':>14}{'cython [ms]':>14}{'speed-up':>10}")
    for name, call in cases:
        t_py = _best(lambda: call(_pure), args.repeat)
        t_cy = _best(lambda: call(_core), args.repeat)
        print(f"{name:<22}{t_py * 1e3:>14.4f}{t_cy * 1e3:>14.4f}{t_py / t_cy:>10.1f}")
    # sanity: both backends agree on the benchmark inputs; ellipsoid
    # trajectories drift apart by rounding, so dual centres agree only loosely
    for name, call in cases:
        out_py, out_cy = call(_pure), call(_core)
        a = np.asarray(out_py[0], dtype=float)
        b = np.asarray(out_cy[0], dtype=float)
        assert np.allclose(a, b, rtol=1e-3, atol=1e-9), name


if __name__ == "__main__":
    main()
