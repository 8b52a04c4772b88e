"""Search over which users receive the service program."""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass, field

from .exceptions import InstanceTooLarge
from .inner import solve_given_placement
from .model import Placement, ProblemInstance, TecReport

__all__ = [
    "SearchTrace",
    "exhaustive_search",
    "greedy_search",
    "uplink_heuristic",
    "EXHAUSTIVE_CAP",
    "IMPROVEMENT_TOL",
]

EXHAUSTIVE_CAP = 16
#: A move must lower the objective by more than this fraction of |V|.
IMPROVEMENT_TOL = 1e-9


@dataclass
class SearchTrace:
    """Accepted placements in visiting order.

    ``inner_solves`` counts candidate placements evaluated; the solve of the
    starting placement (everyone offloading) is counted in ``baseline_solves``.
    """

    steps: list[tuple[Placement, float]] = field(default_factory=list)
    inner_solves: int = 0
    baseline_solves: int = 0

    @property
    def total_solves(self) -> int:
        return self.inner_solves + self.baseline_solves

    def record(self, report: TecReport) -> None:
        self.steps.append((report.placement, report.objective))


def _improves(candidate: float, incumbent: float) -> bool:
    return candidate - incumbent < -IMPROVEMENT_TOL * abs(incumbent)


def _finish(report: TecReport, trace: SearchTrace, start: float, method: str) -> TecReport:
    return report.with_diagnostics(
        method=method,
        inner_solves=trace.total_solves,
        candidates=trace.inner_solves,
        trace=trace,
        wall_time=time.perf_counter() - start,
    )


def exhaustive_search(instance: ProblemInstance, max_users: int = EXHAUSTIVE_CAP) -> TecReport:
    """Global optimum over all ``2**K`` placements.

    Ties go to the lexicographically smallest sorted ``K1``.
    """
    n = instance.size
    if n > max_users:
        raise InstanceTooLarge(f"exhaustive search over {n} users exceeds the cap of {max_users}")
    start = time.perf_counter()
    trace = SearchTrace()
    best = None
    best_key = None
    for size in range(n + 1):
        for combo in itertools.combinations(range(n), size):
            report = solve_given_placement(instance, Placement.of(combo))
            trace.inner_solves += 1
            key = (report.objective, combo)
            if best is None or report.objective < best.objective or (
                report.objective == best.objective and combo < best_key[1]
            ):
                best, best_key = report, key
                trace.record(report)
    return _finish(best, trace, start, "exhaustive")


def greedy_search(instance: ProblemInstance) -> TecReport:
    """Move users to K1 one at a time, always taking the largest decrease.

    Starts from everyone offloading and stops when no single move improves
    the objective.  Ties go to the lowest user index.
    """
    start = time.perf_counter()
    n = instance.size
    trace = SearchTrace()
    current = solve_given_placement(instance, Placement())
    trace.baseline_solves += 1
    trace.record(current)
    while len(current.placement) < n:
        best = None
        for k in current.placement.k0(n):
            report = solve_given_placement(instance, Placement(current.placement.k1 | {k}))
            trace.inner_solves += 1
            if best is None or report.objective < best.objective:
                best = report
        if not _improves(best.objective, current.objective):
            break
        current = best
        trace.record(current)
    return _finish(current, trace, start, "greedy")


def uplink_heuristic(instance: ProblemInstance) -> TecReport:
    """Visit users by ascending uplink gain and keep each one local if that helps."""
    start = time.perf_counter()
    trace = SearchTrace()
    order = sorted(range(instance.size), key=lambda k: (instance.users[k].uplink_gain, k))
    current = solve_given_placement(instance, Placement())
    trace.baseline_solves += 1
    trace.record(current)
    k1: frozenset[int] = frozenset()
    for k in order:
        candidate = solve_given_placement(instance, Placement(k1 | {k}))
        trace.inner_solves += 1
        if _improves(candidate.objective, current.objective):
            current = candidate
            k1 = candidate.placement.k1
            trace.record(current)
    return _finish(current, trace, start, "heuristic")
