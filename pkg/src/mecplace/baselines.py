"""Benchmark schemes: everyone offloads, and selfish users with static equal shares."""
from __future__ import annotations

import math
import time

import numpy as np

from .inner import optimal_local_frequency, solve_given_placement
from .model import Allocation, Placement, ProblemInstance, TecReport, local_energy, uplink_rate

__all__ = ["all_edge", "independent_optimization"]


def all_edge(instance: ProblemInstance) -> TecReport:
    """Every user offloads; bandwidth and edge CPU are allocated optimally."""
    return solve_given_placement(instance, Placement()).with_diagnostics(method="all-edge")


def independent_optimization(instance: ProblemInstance) -> TecReport:
    """Each user gets ``1/K`` of every resource and picks its cheaper option alone.

    A user computing locally downloads the program by unicast over ``W_D/K``
    and pays receive energy for it; an offloading user uses ``W_U/K`` uplink
    and ``F_c/K`` edge cycles whether or not the other users offload.
    """
    start = time.perf_counter()
    cfg = instance.config
    n = instance.size
    share = 1.0 / n
    down_bw = cfg.downlink_bandwidth * share
    fc_share = cfg.edge_cpu_budget * share

    times = np.zeros(n)
    energies = np.zeros(n)
    tecs = np.zeros(n)
    k1 = []
    f_local, a, tau_u, fc = {}, {}, {}, {}
    download = {}
    for k, u in enumerate(instance.users):
        bt, be = u.weight_time, u.weight_energy

        rate_d = down_bw * math.log2(1.0 + cfg.ap_power * u.downlink_gain / (down_bw * cfg.noise_psd))
        t_dl = cfg.program_size / rate_d
        f = optimal_local_frequency(u)
        t_loc = u.workload / f if u.workload > 0 else 0.0
        if f == 0.0 and u.workload > 0:
            t_loc = math.inf
        e_loc = u.rx_power * t_dl + local_energy(u, f)
        cost_loc = bt * t_dl + (bt * t_loc if bt else 0.0) + be * e_loc

        t_up = u.task_bits / uplink_rate(share, u, cfg) if u.task_bits > 0 else 0.0
        t_edge = u.workload / fc_share
        e_edge = u.tx_power * t_up
        cost_edge = bt * (t_up + t_edge) + be * e_edge

        if cost_loc < cost_edge:
            k1.append(k)
            f_local[k] = f
            download[k] = t_dl
            times[k], energies[k], tecs[k] = t_dl + t_loc, e_loc, cost_loc
        else:
            a[k], tau_u[k], fc[k] = share, t_up, fc_share
            times[k], energies[k], tecs[k] = t_up + t_edge, e_edge, cost_edge

    alloc = Allocation(local_freq=f_local, bandwidth_frac=a, offload_time=tau_u, edge_freq=fc, broadcast_time=0.0)
    return TecReport(
        placement=Placement.of(k1),
        allocation=alloc,
        time=times,
        energy=energies,
        tec=tecs,
        objective=float(tecs.sum()),
        diagnostics={
            "method": "independent",
            "download_time": download,
            "inner_solves": 0,
            "wall_time": time.perf_counter() - start,
        },
    )
