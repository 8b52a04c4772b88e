"""Command-line experiment harness.

Runs one or more solvers on generated scenarios and writes one record per
(sweep value, seed, method) plus mean and standard-deviation rows per
(sweep value, method).  ``--validate`` checks a previously written file.

Sweep values use the units of the simulation tables: ``S`` and ``I`` in
Mbit, ``C`` in cycles per bit, ``K`` a user count and ``beta_T`` a weight.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .admm import solve_admm
from .baselines import all_edge, independent_optimization
from .exceptions import InvalidSpec, MecPlaceError, UnknownMethod, UnknownParameter
from .model import ProblemInstance, TecReport
from .placement import exhaustive_search, greedy_search, uplink_heuristic
from .scenario import ScenarioSpec, generate, load

__all__ = [
    "METHODS",
    "SWEEP_PARAMS",
    "SCHEMA_VERSION",
    "FIELDS",
    "run",
    "sweep",
    "aggregate",
    "validate_records",
    "main",
]

SCHEMA_VERSION = 1

METHODS: dict[str, Callable[[ProblemInstance], TecReport]] = {
    "exhaustive": exhaustive_search,
    "greedy": greedy_search,
    "heuristic": uplink_heuristic,
    "admm": solve_admm,
    "all-edge": all_edge,
    "independent": independent_optimization,
}

MBIT = 1e6


def _set_bits(spec: ScenarioSpec, value: float) -> ScenarioSpec:
    return spec.with_(task_bits=value * MBIT, homogeneous=True)


SWEEP_PARAMS: dict[str, Callable[[ScenarioSpec, float], ScenarioSpec]] = {
    "S": lambda spec, v: spec.with_(program_size=v * MBIT),
    "I": _set_bits,
    "C": lambda spec, v: spec.with_(cycles_per_bit=v),
    "K": lambda spec, v: spec.with_(user_count=int(v)),
    "beta_T": lambda spec, v: spec.with_(beta_T=v),
}

FIELDS = (
    "schema",
    "kind",
    "sweep",
    "value",
    "seed",
    "method",
    "K",
    "S",
    "I_mean",
    "C",
    "beta_T",
    "V",
    "total_time",
    "total_energy",
    "placement",
    "iterations",
    "converged",
    "wall_clock",
)
#: Columns averaged in aggregate rows.
NUMERIC = ("K", "S", "I_mean", "C", "beta_T", "V", "total_time", "total_energy", "iterations", "converged", "wall_clock")
KINDS = ("record", "mean", "std")


def _check_methods(methods: Sequence[str]) -> list[str]:
    out = []
    for m in methods:
        if m not in METHODS:
            raise UnknownMethod(f"unknown method {m!r}; choose from {', '.join(METHODS)}")
        out.append(m)
    return out


def _iterations(method: str, report: TecReport) -> int:
    d = report.diagnostics
    if method == "admm":
        return int(d["iterations"])
    return int(d.get("inner_solves", 0))


def _record(spec: ScenarioSpec, inst: ProblemInstance, seed: int, method: str, report: TecReport, wall: float,
            sweep_name="", value="") -> dict:
    return {
        "schema": SCHEMA_VERSION,
        "kind": "record",
        "sweep": sweep_name,
        "value": value,
        "seed": seed,
        "method": method,
        "K": spec.user_count,
        "S": spec.program_size,
        "I_mean": float(np.mean(inst.arrays.task_bits)),
        "C": spec.cycles_per_bit,
        "beta_T": spec.beta_T,
        "V": report.objective,
        "total_time": report.total_time,
        "total_energy": report.total_energy,
        "placement": report.placement.bitmask(spec.user_count),
        "iterations": _iterations(method, report),
        "converged": int(not report.diagnostics.get("nonconvergence", False)),
        "wall_clock": wall,
    }


def _solve_one(args) -> dict:
    spec, seed, method, sweep_name, value = args
    inst = generate(spec.with_(rng_seed=seed))
    start = time.perf_counter()
    report = METHODS[method](inst)
    wall = time.perf_counter() - start
    return _record(spec, inst, seed, method, report, wall, sweep_name, value)


def _execute(tasks: list, jobs: int) -> list[dict]:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_solve_one, tasks))
    else:
        rows = [_solve_one(t) for t in tasks]
    return rows


def _canonical(rows: Iterable[dict], methods: Sequence[str]) -> list[dict]:
    order = {m: i for i, m in enumerate(methods)}
    return sorted(rows, key=lambda r: (0.0 if r["value"] == "" else float(r["value"]), r["seed"], order[r["method"]]))


def aggregate(rows: Sequence[dict]) -> list[dict]:
    """Mean and sample standard deviation rows per (sweep value, method)."""
    groups: dict[tuple, list[dict]] = {}
    for r in rows:
        if r["kind"] == "record":
            groups.setdefault((r["sweep"], r["value"], r["method"]), []).append(r)
    out = []
    for (name, value, method), members in groups.items():
        for kind in ("mean", "std"):
            row = {f: "" for f in FIELDS}
            row.update(schema=SCHEMA_VERSION, kind=kind, sweep=name, value=value, method=method)
            for f in NUMERIC:
                vals = np.array([float(m[f]) for m in members])
                if kind == "mean":
                    row[f] = float(np.mean(vals))
                else:
                    row[f] = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
            out.append(row)
    return out


def run(spec: ScenarioSpec, methods: Sequence[str], seed: int = 0, reps: int = 1, jobs: int = 1) -> list[dict]:
    """Records for seeds ``seed .. seed+reps-1`` followed by aggregate rows."""
    methods = _check_methods(methods)
    tasks = [(spec, seed + i, m, "", "") for i in range(reps) for m in methods]
    rows = _canonical(_execute(tasks, jobs), methods)
    return rows + aggregate(rows)


def sweep(
    spec: ScenarioSpec,
    param: str,
    values: Sequence[float],
    methods: Sequence[str],
    seed: int = 0,
    reps: int = 1,
    exhaustive_cap: int = 12,
    jobs: int = 1,
) -> list[dict]:
    """Cross product of ``values`` and ``methods``; exhaustive rows are dropped above ``exhaustive_cap`` users."""
    if param not in SWEEP_PARAMS:
        raise UnknownParameter(f"unknown sweep parameter {param!r}; choose from {', '.join(SWEEP_PARAMS)}")
    methods = _check_methods(methods)
    tasks = []
    for v in values:
        point = SWEEP_PARAMS[param](spec, v)
        for i in range(reps):
            for m in methods:
                if m == "exhaustive" and point.user_count > exhaustive_cap:
                    continue
                tasks.append((point, seed + i, m, param, v))
    rows = _canonical(_execute(tasks, jobs), methods)
    return rows + aggregate(rows)


# ---------------------------------------------------------------------------
# serialisation


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def to_csv(rows: Sequence[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(FIELDS)
    for r in rows:
        w.writerow([_fmt(r[f]) for f in FIELDS])
    return buf.getvalue()


def to_json(rows: Sequence[dict]) -> str:
    return json.dumps({"schema": SCHEMA_VERSION, "fields": list(FIELDS), "rows": list(rows)}, indent=1) + "\n"


def _parse_cell(field: str, raw: str):
    if raw == "":
        return ""
    if field in ("schema", "seed"):
        return int(raw)
    if field in ("kind", "sweep", "method", "placement"):
        return raw
    return float(raw)


def read_records(path: str | Path) -> list[dict]:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        if doc.get("schema") != SCHEMA_VERSION or tuple(doc.get("fields", ())) != FIELDS:
            raise InvalidSpec("schema version or field list mismatch")
        return doc["rows"]
    reader = csv.reader(io.StringIO(text))
    header = next(reader, None)
    if tuple(header or ()) != FIELDS:
        raise InvalidSpec("header does not match the record schema")
    rows = []
    for lineno, cells in enumerate(reader, 2):
        if len(cells) != len(FIELDS):
            raise InvalidSpec(f"line {lineno}: expected {len(FIELDS)} cells, got {len(cells)}")
        try:
            rows.append({f: _parse_cell(f, c) for f, c in zip(FIELDS, cells)})
        except ValueError as exc:
            raise InvalidSpec(f"line {lineno}: {exc}") from None
    return rows


def validate_records(rows: Sequence[dict], tol: float = 1e-12) -> list[str]:
    """Problems found in ``rows``; empty when the file is well formed."""
    problems = []
    for i, r in enumerate(rows):
        if set(r) != set(FIELDS):
            problems.append(f"row {i}: fields differ from the schema")
            continue
        if r["schema"] != SCHEMA_VERSION:
            problems.append(f"row {i}: schema {r['schema']!r}")
        if r["kind"] not in KINDS:
            problems.append(f"row {i}: kind {r['kind']!r}")
        if r["method"] not in METHODS:
            problems.append(f"row {i}: method {r['method']!r}")
        if r["kind"] == "record":
            for f in ("V", "total_time", "total_energy", "wall_clock"):
                if not (isinstance(r[f], (int, float)) and r[f] >= 0 and math.isfinite(r[f])):
                    problems.append(f"row {i}: {f} must be a finite nonnegative number")
    if problems:
        return problems
    records = [r for r in rows if r["kind"] == "record"]
    expected = {(a["kind"], a["sweep"], str(a["value"]), a["method"]): a for a in aggregate(records)}
    emitted = {(a["kind"], a["sweep"], str(a["value"]), a["method"]): a for a in rows if a["kind"] != "record"}
    if set(expected) != set(emitted):
        problems.append("aggregate rows do not match the record groups")
        return problems
    for key, a in emitted.items():
        for f in NUMERIC:
            want = expected[key][f]
            if abs(float(a[f]) - want) > tol * max(1.0, abs(want)):
                problems.append(f"{key}: {f} = {a[f]!r}, recomputed {want!r}")
    return problems


# ---------------------------------------------------------------------------
# entry point


def _parse_sweep(text: str) -> tuple[str, list[float]]:
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected PARAM=V1,V2,...")
    name, raw = text.split("=", 1)
    try:
        values = [float(v) for v in raw.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad sweep values {raw!r}") from None
    if not values:
        raise argparse.ArgumentTypeError("sweep needs at least one value")
    return name.strip(), values


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mecplace", description=__doc__.split("\n\n")[0])
    p.add_argument("--spec", type=Path, help="scenario file (key = value lines); defaults apply otherwise")
    p.add_argument("--method", default="greedy", help="comma-separated list of: " + ", ".join(METHODS))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--sweep", type=_parse_sweep, metavar="PARAM=V1,V2,...", help="one of " + ", ".join(SWEEP_PARAMS))
    p.add_argument("--exhaustive-cap", type=int, default=12, help="skip exhaustive rows above this many users in sweeps")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")
    p.add_argument("--out", type=Path, help="output file (stdout if omitted)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.add_argument("--validate", type=Path, metavar="FILE", help="check a record file and exit")
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.validate is not None:
            problems = validate_records(read_records(args.validate))
            for line in problems:
                print(f"mecplace: invalid: {line}", file=sys.stderr)
            return 1 if problems else 0
        if args.reps < 1:
            raise InvalidSpec("--reps must be at least 1")
        spec = load(args.spec) if args.spec else ScenarioSpec()
        methods = [m.strip() for m in args.method.split(",") if m.strip()]
        if args.sweep:
            name, values = args.sweep
            rows = sweep(spec, name, values, methods, args.seed, args.reps, args.exhaustive_cap, args.jobs)
        else:
            rows = run(spec, methods, args.seed, args.reps, args.jobs)
    except (MecPlaceError, OSError) as exc:
        print(f"mecplace: error: {exc}", file=sys.stderr)
        return 2
    for r in rows:
        if r["kind"] == "record" and not r["converged"]:
            print(f"mecplace: warning: {r['method']} did not converge for seed {r['seed']}", file=sys.stderr)
    text = to_json(rows) if args.format == "json" else to_csv(rows)
    if args.out:
        args.out.write_text(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
