import json
import subprocess
import sys

import numpy as np
import pytest

from mecplace import UnknownMethod, UnknownParameter
from mecplace.cli import FIELDS, main, read_records, run, sweep, to_csv, validate_records
from mecplace.scenario import ScenarioSpec, dump

SMALL = ScenarioSpec(user_count=5)


def _records(rows, method=None):
    return [r for r in rows if r["kind"] == "record" and (method is None or r["method"] == method)]


def _means(rows, method):
    return {r["value"]: r for r in rows if r["kind"] == "mean" and r["method"] == method}


def _strip_clock(rows):
    return [{k: v for k, v in r.items() if k != "wall_clock"} for r in rows]


def test_run_is_deterministic():
    one = run(SMALL, ["greedy", "admm"], seed=3, reps=2)
    two = run(SMALL, ["greedy", "admm"], seed=3, reps=2)
    assert _strip_clock(_records(one)) == _strip_clock(_records(two))
    assert [(r["seed"], r["method"]) for r in _records(one)] == [(3, "greedy"), (3, "admm"), (4, "greedy"), (4, "admm")]


def test_aggregate_rows_match_records():
    rows = run(SMALL, ["heuristic"], seed=0, reps=4)
    v = np.array([r["V"] for r in _records(rows)])
    mean = _means(rows, "heuristic")[""]
    std = next(r for r in rows if r["kind"] == "std")
    assert abs(mean["V"] - v.mean()) <= 1e-12 * v.mean()
    assert abs(std["V"] - v.std(ddof=1)) <= 1e-12 * v.mean()
    assert validate_records(rows) == []


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_written_file_validates(tmp_path, capsys, fmt):
    out = tmp_path / f"r.{fmt}"
    assert main(["--method", "greedy,all-edge", "--reps", "2", "--out", str(out), "--format", fmt]) == 0
    rows = read_records(out)
    assert {r["kind"] for r in rows} == {"record", "mean", "std"}
    assert all(isinstance(r["placement"], str) for r in rows if r["kind"] == "record")
    assert main(["--validate", str(out)]) == 0
    if fmt == "json":
        doc = json.loads(out.read_text())
        assert doc["fields"] == list(FIELDS)


def test_tampered_aggregate_fails_validation(tmp_path, capsys):
    rows = run(SMALL, ["greedy"], reps=2)
    rows[-2]["V"] *= 1 + 1e-9
    path = tmp_path / "bad.csv"
    path.write_text(to_csv(rows))
    assert main(["--validate", str(path)]) == 1
    assert "invalid" in capsys.readouterr().err


def test_spec_file(tmp_path, capsys):
    path = tmp_path / "spec.txt"
    dump(ScenarioSpec(user_count=3, program_size=16e6), path)
    assert main(["--spec", str(path), "--method", "independent"]) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert lines[0].split(",") == list(FIELDS)
    rec = dict(zip(FIELDS, lines[1].split(",")))
    assert rec["K"] == "3" and float(rec["S"]) == 16e6 and len(rec["placement"]) == 3


def test_unknown_names(capsys):
    with pytest.raises(UnknownMethod):
        run(SMALL, ["simplex"])
    with pytest.raises(UnknownParameter):
        sweep(SMALL, "W", [1.0], ["greedy"])
    assert main(["--method", "simplex"]) == 2
    assert main(["--sweep", "W=1,2"]) == 2
    assert capsys.readouterr().err.count("mecplace: error:") == 2


def test_exhaustive_rows_dropped_above_cap():
    rows = sweep(ScenarioSpec(), "K", [4, 14], ["heuristic", "exhaustive"], exhaustive_cap=12)
    recs = _records(rows)
    assert {(r["K"], r["method"]) for r in recs} == {(4, "heuristic"), (4, "exhaustive"), (14, "heuristic")}


def test_all_edge_constant_over_program_size():
    rows = sweep(SMALL, "S", [16, 32, 64, 128], ["all-edge"], seed=0, reps=3)
    for seed in range(3):
        vals = {r["V"] for r in _records(rows) if r["seed"] == seed}
        assert len(vals) == 1


@pytest.mark.slow
def test_admm_close_to_greedy_at_ten_users():
    # per-seed gaps are heavy-tailed (one seed in the first ten is 15% off),
    # so average over the full 100-run sample
    rows = run(ScenarioSpec(), ["greedy", "admm"], seed=0, reps=100)
    g = _means(rows, "greedy")[""]["V"]
    a = _means(rows, "admm")[""]["V"]
    assert abs(a - g) <= 0.02 * g


def test_time_weight_sweep_directions():
    betas = [0.05, 0.1, 0.3, 0.5, 0.9]
    rows = sweep(SMALL, "beta_T", betas, ["greedy"], seed=0, reps=3)
    means = _means(rows, "greedy")
    t = [means[b]["total_time"] for b in betas]
    e = [means[b]["total_energy"] for b in betas]
    assert all(y <= x * (1 + 1e-9) for x, y in zip(t, t[1:]))
    assert all(y >= x * (1 - 1e-9) for x, y in zip(e, e[1:]))


def test_cycles_per_bit_sweep_gap_shrinks():
    rows = sweep(ScenarioSpec(), "C", [100, 2500], ["greedy", "all-edge"], seed=0, reps=3)
    g, e = _means(rows, "greedy"), _means(rows, "all-edge")
    gap = {c: (e[c]["V"] - g[c]["V"]) / e[c]["V"] for c in (100, 2500)}
    assert gap[2500] < gap[100]


def test_module_entry_point():
    out = subprocess.run(
        [sys.executable, "-m", "mecplace", "--method", "all-edge", "--format", "json"],
        capture_output=True, text=True, check=True,
    )
    doc = json.loads(out.stdout)
    assert doc["rows"][0]["method"] == "all-edge"
