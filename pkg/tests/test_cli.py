import copy
import csv
import io
import json
import os
import subprocess
import sys

import yaml

from probcontracts.aeb.campaign import bundled_spec
from probcontracts.cli import EXIT_FLOOR, EXIT_INDEPENDENCE, EXIT_INVALID, EXIT_OK, main


def write_spec(tmp_path, mutate=None, mode="naive"):
    spec = copy.deepcopy(bundled_spec(mode))
    if mutate:
        mutate(spec)
    path = tmp_path / "spec.yaml"
    path.write_text(yaml.safe_dump(spec))
    return str(path)


def test_verify_writes_outputs_and_prints_the_top_line(tmp_path, capsys):
    out = tmp_path / "out"
    code = main(["verify", "naive", "--samples", "100", "--seed", "7", "--out", str(out)])
    assert code == EXIT_OK
    line = capsys.readouterr().out.strip()
    assert line.startswith("Keeps Distance: Minimum ") and line.endswith("Confidence 0.9980")
    for name in ("evidence.json", "case.txt", "summary.csv"):
        assert (out / name).exists()
    doc = json.loads((out / "evidence.json").read_text())
    assert doc["evidence"]["meta"]["campaign"]["samples"] == 100
    rows = list(csv.DictReader(io.StringIO((out / "summary.csv").read_text())))
    assert rows[0]["name"] == "aeb-naive"


def test_case_renders_the_stored_tree(tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["verify", "naive", "--samples", "60", "--out", str(out)]) == EXIT_OK
    capsys.readouterr()
    assert main(["case", str(out / "evidence.json")]) == EXIT_OK
    assert capsys.readouterr().out == (out / "case.txt").read_text()


def test_dangling_reference_exits_2(tmp_path, capsys):
    spec = write_spec(tmp_path, lambda s: s["pipeline"]["refine"]["of"]["compose"].append("ghost"))
    assert main(["verify", spec, "--out", str(tmp_path / "o")]) == EXIT_INVALID
    assert "ghost" in capsys.readouterr().err


def test_missing_file_exits_2(tmp_path):
    assert main(["verify", str(tmp_path / "none.yaml")]) == EXIT_INVALID
    assert main(["case", str(tmp_path / "none.json")]) == EXIT_INVALID


def test_shared_stream_exits_4(tmp_path, capsys):
    def dup(s):
        s["sources"]["perception2"] = copy.deepcopy(s["sources"]["perception"])
        s["sources"]["perception2"]["test"]["stream"] = "perception"
        s["pipeline"]["refine"]["of"]["compose"].append("perception2")
    spec = write_spec(tmp_path, dup)
    code = main(["verify", spec, "--samples", "50", "--out", str(tmp_path / "o")])
    assert code == EXIT_INDEPENDENCE
    assert "perception" in capsys.readouterr().err


def test_floor_exits_3(tmp_path):
    spec = write_spec(tmp_path, lambda s: s.update(floor=0.99))
    assert main(["verify", spec, "--samples", "60", "--out", str(tmp_path / "o")]) == EXIT_FLOOR


def test_trace_log_and_replay(tmp_path, capsys):
    logs = tmp_path / "logs"
    assert main(["verify", "naive", "--samples", "20", "--out", str(tmp_path / "o"),
                 "--trace-log", str(logs)]) == EXIT_OK
    capsys.readouterr()
    assert main(["replay", str(logs / "perception.jsonl")]) == EXIT_OK
    text = capsys.readouterr().out
    assert "Accurate Distance" in text and "Simulation-Based Testing" in text


def test_table_is_monotone_in_budget(tmp_path):
    out = tmp_path / "table.csv"
    assert main(["table", "--budgets", "60,120,240", "--seed", "2", "--out", str(out)]) == EXIT_OK
    rows = list(csv.DictReader(out.open()))
    assert [int(r["budget"]) for r in rows] == [60, 120, 240]
    for mode in ("naive", "optimized"):
        bounds = [float(r[f"{mode}_bound"]) for r in rows]
        assert bounds == sorted(bounds), mode
    for r in rows:
        assert float(r["optimized_bound"]) >= float(r["naive_bound"])


def test_selftest_passes(capsys):
    assert main(["selftest"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 3 and all(l.startswith("PASS") for l in lines)


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "probcontracts.cli", "--help"],
                          capture_output=True, text=True, env={**os.environ})
    assert proc.returncode == 0 and "verify" in proc.stdout
