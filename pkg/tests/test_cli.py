import json
import subprocess
import sys
from pathlib import Path

import pytest

from mcsched.cli import main
from mcsched.scheduling import Policy

DATA = Path(__file__).parent / "data"
SCENARIO = DATA / "scenario.json"


@pytest.fixture
def trace_file(tmp_path):
    out = tmp_path / "t.json"
    assert main(["--quiet", "gen", "--config", str(SCENARIO), "--seed", "3", "--out", str(out)]) == 0
    return out


def test_gen_is_byte_deterministic(tmp_path, trace_file):
    again = tmp_path / "again.json"
    assert main(["--quiet", "gen", "--config", str(SCENARIO), "--seed", "3", "--out", str(again)]) == 0
    assert again.read_bytes() == trace_file.read_bytes()


def test_gen_seed_from_environment(tmp_path, monkeypatch, trace_file):
    monkeypatch.setenv("MCSCHED_SEED", "3")
    out = tmp_path / "env.json"
    assert main(["--quiet", "gen", "--config", str(SCENARIO), "--out", str(out)]) == 0
    assert out.read_bytes() == trace_file.read_bytes()


def test_gen_without_seed_is_usage_error(tmp_path, monkeypatch, capsys):
    monkeypatch.delenv("MCSCHED_SEED", raising=False)
    assert main(["gen", "--out", str(tmp_path / "x.json")]) == 1
    assert "seed" in capsys.readouterr().err


def test_run_is_byte_deterministic(tmp_path, trace_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for out in (a, b):
        assert main(["--quiet", "run", "--trace", str(trace_file), "--policy", "k4s", "--out", str(out)]) == 0
    assert a.read_bytes() == b.read_bytes()
    lines = a.read_text().splitlines()
    assert lines[0].startswith("# trace_sha256=")
    assert lines[1].startswith("t,seq,event,policy,")


def test_weights_are_normalized(tmp_path, trace_file):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["--quiet", "run", "--trace", str(trace_file), "--policy", "k4s", "--weights", "52.5,42.5,5", "--out", str(a)])
    main(["--quiet", "run", "--trace", str(trace_file), "--policy", "k4s", "--weights", "105,85,10", "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_compare_writes_all_policies(tmp_path, trace_file):
    out = tmp_path / "cmp"
    assert main(["--quiet", "compare", "--trace", str(trace_file), "--config", str(SCENARIO), "--out-dir", str(out)]) == 0
    files = sorted(p.name for p in out.iterdir())
    assert files == sorted([f"{p.value}.csv" for p in Policy] + ["summary.csv"])
    hashes = {(out / f).read_text().splitlines()[0] for f in files}
    assert len(hashes) == 1
    summary = (out / "summary.csv").read_text().splitlines()
    assert [row.split(",")[0] for row in summary[2:]] == [p.value for p in Policy]


def test_compare_matches_individual_runs(tmp_path, trace_file):
    out = tmp_path / "cmp"
    main(["--quiet", "compare", "--trace", str(trace_file), "--out-dir", str(out)])
    single = tmp_path / "single.csv"
    main(["--quiet", "run", "--trace", str(trace_file), "--policy", "most_allocated", "--out", str(single)])
    assert (out / "most_allocated.csv").read_bytes() == single.read_bytes()


def test_validate(trace_file, capsys):
    assert main(["validate", "--trace", str(trace_file)]) == 0
    assert capsys.readouterr().out.startswith("ok:")


@pytest.mark.parametrize(
    "argv",
    [
        ["run", "--trace", "{trace}", "--policy", "bogus", "--out", "{tmp}/x.csv"],
        ["run", "--trace", "{trace}", "--policy", "k4s", "--weights", "1,2", "--out", "{tmp}/x.csv"],
        ["run", "--trace", "{trace}", "--policy", "k4s", "--weights", "1,-2,3", "--out", "{tmp}/x.csv"],
        ["run", "--trace", "{trace}", "--policy", "k4s", "--weights", "1,2,3,4", "--out", "{tmp}/x.csv"],
        ["run", "--trace", "{trace}"],
        ["frobnicate"],
        [],
    ],
)
def test_usage_errors_exit_1(argv, tmp_path, trace_file, capsys):
    argv = [a.format(trace=trace_file, tmp=tmp_path) for a in argv]
    assert main(argv) == 1
    assert capsys.readouterr().err


def test_data_errors_exit_2(tmp_path, capsys):
    missing = tmp_path / "missing.json"
    assert main(["validate", "--trace", str(missing)]) == 2
    bad = tmp_path / "bad.json"
    doc = json.loads((DATA / "minimal_trace.json").read_text())
    doc["events"].reverse()
    bad.write_text(json.dumps(doc))
    assert main(["validate", "--trace", str(bad)]) == 2
    err = capsys.readouterr().err
    assert "event 0" in err
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"weights": [1, 2, 3], "surprise": True}))
    assert main(["gen", "--config", str(cfg), "--seed", "1", "--out", str(tmp_path / "t.json")]) == 2
    assert main(["gen", "--config", str(tmp_path / "nope.json"), "--seed", "1", "--out", str(tmp_path / "t.json")]) == 2


def test_module_entry_point(tmp_path):
    out = tmp_path / "m.json"
    proc = subprocess.run(
        [sys.executable, "-m", "mcsched", "--quiet", "gen", "--config", str(SCENARIO), "--seed", "1", "--out", str(out)],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0, proc.stderr
    assert json.loads(out.read_text())["version"] == 1
