import io
import json
import subprocess
import sys

import pytest

from wordperc import cli
from wordperc import montecarlo as mc


def run(capsys, *argv):
    code = cli.run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_estimate_example(capsys):
    code, out, _ = run(capsys, "estimate", "--event", "elementary-outlet", "--p", "0.5",
                       "--trials", "100000", "--seed", "42", "--out", "csv")
    assert code == 0
    rows = [ln for ln in out.splitlines() if not ln.startswith("#")]
    assert rows[0] == ",".join(mc.CSV_COLUMNS) and len(rows) == 2
    assert "seed=42" in out
    rep = mc.read_report(io.StringIO(out))[0]
    assert abs(rep.p_hat - 1 / 256) < 0.0008


def test_estimate_is_byte_identical_across_threads(capsys, monkeypatch):
    args = ["estimate", "--event", "crossing", "--p", "0.33", "--N", "6", "--trials", "300", "--seed", "5"]
    outs = []
    for threads in ("1", "4"):
        code, out, _ = run(capsys, *args, "--threads", threads)
        assert code == 0
        outs.append(out)
    monkeypatch.setenv("PERC_THREADS", "3")
    outs.append(run(capsys, *args)[1])
    outs.append(run(capsys, *args, "--out", "csv")[1])
    assert len(set(outs)) == 1
    assert "threads" not in outs[0]


def test_bad_thread_env(capsys, monkeypatch):
    monkeypatch.setenv("PERC_THREADS", "many")
    code, _, err = run(capsys, "estimate", "--event", "gamma", "--p", "0.5", "--L", "1",
                       "--trials", "5", "--seed", "1")
    assert code == 1 and "PERC_THREADS" in err


def test_event_example(capsys):
    code, out, _ = run(capsys, "event", "--event", "crossing", "--p", "1.0", "--N", "8", "--seed", "1")
    assert code == 0
    assert out.splitlines()[-1] == "true"
    assert out.startswith("# wordperc event seed=1")


def test_usage_errors():
    for argv in (["estimate", "--bogus"], ["frobnicate"], ["event", "--event", "crossing", "--p", "0.5"], []):
        proc = subprocess.run([sys.executable, "-m", "wordperc", *argv], capture_output=True, text=True)
        assert proc.returncode == 1, argv
        assert "usage" in proc.stderr


def test_invalid_spec_is_a_usage_error(capsys):
    code, _, err = run(capsys, "event", "--event", "nonsense", "--p", "0.5", "--seed", "1")
    assert code == 1 and "unknown event kind" in err


def test_gen(capsys):
    code, out, _ = run(capsys, "gen", "--p", "0.5", "--seed", "1", "--region", "0..3,0..2,0..1")
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "# wordperc gen seed=1 p=0.5 region=0..3,0..2,0..1"
    assert lines[2] == "z=0" and len(lines[3]) == 4
    code, out2, _ = run(capsys, "gen", "--p", "0.5", "--seed", "1", "--region", "0..3,0..2,0..1", "--format", "json")
    doc = json.loads(out2)
    assert len(doc["states"]) == 4 and len(doc["states"][0]) == 3
    # text row y, column x at z=0 matches the json array
    assert int(lines[3][2]) == doc["states"][2][0][0]


def test_oracle_outcomes(capsys):
    base = ["oracle", "--p", "1.0", "--seed", "0", "--region", "0..2,0..2,0..0", "--start", "1,1,0"]
    code, out, _ = run(capsys, *base, "--word", "111")
    assert code == 0 and json.loads(out)["status"] == "found"
    code, out, _ = run(capsys, *base, "--word", "101")
    assert code == 2 and json.loads(out)["status"] == "none"
    code, out, _ = run(capsys, "oracle", "--p", "1.0", "--seed", "0", "--region", "0..3,0..3,0..3",
                       "--start", "0,0,0", "--word", "1" * 40, "--budget", "5")
    assert code == 2 and json.loads(out)["status"] == "budget_exhausted"
    code, _, _ = run(capsys, *base)
    assert code == 1


def test_embed_planted_then_verify(capsys, tmp_path):
    dest = tmp_path / "out.json"
    args = ["embed", "--p", "0.5", "--L", "1", "--steps", "50", "--window", "2", "--seed", "7",
            "--plant", "full", "--stretched-runs", "2", "--json", str(dest)]
    code, out, _ = run(capsys, *args)
    assert code == 0, out
    summary = json.loads(out)
    assert summary["status"] == "ok" and summary["config"]["seed"] == 7
    doc = json.loads(dest.read_text())
    assert doc["result"]["path"] and doc["verified"]
    first = dest.read_text()
    run(capsys, *args)
    assert dest.read_text() == first
    code, out, _ = run(capsys, "verify", "--json", str(dest))
    assert code == 0 and json.loads(out)["verified"]
    doc["result"]["word_prefix"][5] ^= 1
    dest.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "verify", "--json", str(dest))
    assert code == 2 and json.loads(out)["index"] == 5


def test_embed_reports_failing_stage(capsys, tmp_path):
    word = tmp_path / "w.txt"
    word.write_text("first=1 runs=400,400 tail=zeros\n")
    code, out, _ = run(capsys, "embed", "--p", "0.5", "--L", "3", "--steps", "12", "--word-file", str(word),
                       "--seed", "7", "--json", str(tmp_path / "o.json"))
    assert code == 2
    summary = json.loads(out)
    assert summary["status"] == "infeasible" and summary["stage"] == "oriented_path"
    code, out, _ = run(capsys, "verify", "--json", str(tmp_path / "o.json"))
    assert code == 2


def test_sweep_with_sidecar(capsys, tmp_path):
    dest = tmp_path / "s.csv"
    args = ["sweep", "--event", "crossing", "--p", "0.5", "--N", "6", "--p-values", "0.3,0.5",
            "--scales", "4,6", "--trials", "50", "--seed", "3", "--output", str(dest)]
    code, out, _ = run(capsys, *args)
    assert code == 0 and out == ""
    reps = mc.read_report(dest)
    assert [(r.spec.p, r.spec.scale) for r in reps] == [(0.3, 4), (0.3, 6), (0.5, 4), (0.5, 6)]
    assert all(r.elapsed_ms == 0 for r in reps)
    meta = json.loads((tmp_path / "s.csv.meta.json").read_text())
    assert len(meta["elapsed_ms"]) == 4
    first = dest.read_text()
    run(capsys, *args, "--threads", "4")
    assert dest.read_text() == first


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_estimate_output_formats(capsys, fmt):
    code, out, _ = run(capsys, "estimate", "--event", "gamma", "--p", "0.6", "--L", "2",
                       "--trials", "50", "--seed", "1", "--out", fmt)
    assert code == 0
    reps = mc.read_report(io.StringIO(out))
    assert reps[0].trials == 50 and reps[0].spec.kind == "gamma"


def test_negative_coordinates_need_no_equals_sign(capsys):
    code, out, _ = run(capsys, "oracle", "--p", "1.0", "--seed", "0", "--region", "-2..0,-1..0,-1..-1",
                       "--start", "-1,0,-1", "--word", "11")
    assert code == 0 and json.loads(out)["config"]["region"] == "-2..0,-1..0,-1..-1"
    code, out, _ = run(capsys, "gen", "--p", "0.5", "--seed", "1", "--region", "-1..0,0..0,-2..-1")
    assert code == 0 and out.startswith("# wordperc gen seed=1 p=0.5 region=-1..0,0..0,-2..-1")
