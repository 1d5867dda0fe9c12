import json

import pytest

from disclab.cli import run


@pytest.fixture
def bodies(tmp_path):
    files = {
        "ball2": {"kind": "ball", "radius": 1.0, "dimension": 2},
        "doublecone": {"kind": "double-cone"},
        "disk": {"kind": "ball", "radius": 0.2, "dimension": 2},
    }
    out = {}
    for name, obj in files.items():
        p = tmp_path / f"{name}.json"
        p.write_text(json.dumps(obj))
        out[name] = str(p)
    return out


def test_verify_brunn_passes(bodies, tmp_path):
    assert run(["verify", "--body", bodies["ball2"], "--check", "brunn", "--out", str(tmp_path / "r.json")]) == 0
    doc = json.loads((tmp_path / "r.json").read_text())
    assert doc["result"]["passed"] and doc["config"]["check"] == ["brunn"]


def test_non_smooth_body_is_refused(bodies, capsys):
    assert run(["verify", "--body", bodies["doublecone"], "--check", "bnw-upper"]) == 2
    assert "unsupported: non-smooth body" in capsys.readouterr().err


def test_discrepancy_both_methods_agree(bodies, tmp_path):
    out = tmp_path / "d.json"
    code = run(["discrepancy", "--body", bodies["disk"], "--gen", "grid", "--N", "256", "--method", "both",
                "--outer-radius", "0", "--samples", "200000", "--out", str(out)])
    doc = json.loads(out.read_text())
    values = [r["value"] for r in doc["result"]["results"]]
    assert code == 0 and len(values) == 2 and doc["result"]["comparison"]["agree"]


def test_usage_errors(bodies, capsys):
    assert run(["verify", "--body", bodies["ball2"]]) == 2
    assert run(["nonsense"]) == 2
    assert run(["body", "--body", '{"kind": "ball", "radius": -1, "dimension": 2}']) == 2
    assert run(["body", "--body", '{"kind": "ball", "radius": 1, "dimension": 2, "extra": 1}']) == 2
    assert run(["discrepancy", "--body", bodies["disk"], "--gen", "grid", "--N", "10"]) == 2


def test_outputs_are_byte_identical(bodies, tmp_path):
    args = ["discrepancy", "--body", bodies["disk"], "--gen", "uniform-random", "--N", "16", "--method", "mc",
            "--samples", "20000", "--no-timestamp"]
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    assert run(args + ["--out", str(a)]) == 0
    assert run(args + ["--out", str(b), "--threads", "1"]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.json"
    run(args[:-1] + ["--out", str(c)])
    assert "timestamp" in json.loads(c.read_text())


def test_seed_environment_override(bodies, tmp_path, monkeypatch):
    base = ["discrepancy", "--body", bodies["disk"], "--N", "16", "--method", "mc", "--samples", "5000",
            "--no-timestamp"]
    monkeypatch.setenv("DISCLAB_SEED", "11")
    run(base + ["--seed", "3", "--out", str(tmp_path / "env.json")])
    monkeypatch.delenv("DISCLAB_SEED")
    run(base + ["--seed", "11", "--out", str(tmp_path / "flag.json")])
    assert (tmp_path / "env.json").read_bytes() == (tmp_path / "flag.json").read_bytes()


def test_fourier_and_body_commands(bodies, tmp_path, capsys):
    assert run(["fourier", "--body", bodies["ball2"], "--method", "all", "--rho", "2", "10", "--format", "csv",
                "--no-timestamp"]) == 0
    out = capsys.readouterr().out.splitlines()
    assert out[0].startswith("# ") and out[1].startswith("rho,section_re")
    assert len(out) == 4
    assert run(["body", "--body", bodies["doublecone"], "--theta", "0,0,1", "--samples", "3"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["result"]["sections"][1]["section"] == pytest.approx(2.0)


def test_experiment_and_shell(bodies, tmp_path):
    out = tmp_path / "e.json"
    assert run(["experiment", "--body", bodies["ball2"], "--gen", "grid", "--N", "16,64,256", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["result"]["summary"]["grid"]["passed"]
    assert run(["discrepancy", "--body", bodies["disk"], "--N", "64", "--method", "shell"]) == 0


def test_verify_all_skips_unsupported_checks(tmp_path):
    body = '{"kind": "cube", "side": 1.0, "dimension": 2}'
    out = tmp_path / "v.json"
    code = run(["verify", "--body", body, "--all", "--directions", "2", "--grid-size", "200", "--out", str(out)])
    doc = json.loads(out.read_text())
    names = {r["name"] for r in doc["result"]["reports"]}
    assert code == 0 and {"brunn", "concave-lemma", "double-cone-failure"} <= names
    assert {s["check"] for s in doc["result"]["skipped"]} >= {"bnw-upper", "lower-average"}
