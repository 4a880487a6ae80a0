from __future__ import annotations

import json

import pytest

from walshbiest import __version__, cli
from walshbiest.checks import CheckResult


def _run(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def instance(tmp_path, capsys):
    path = tmp_path / "inst.json"
    code, out, _ = _run(capsys, "gen", "--seed", "7", "--count", "12", "--q-count", "6",
                        "--out", str(path))
    assert code == 0 and path.exists()
    return path


def test_gen_to_stdout_embeds_config(capsys):
    code, out, err = _run(capsys, "gen", "--seed", "7", "--count", "5")
    assert code == 0
    doc = json.loads(out)
    assert doc["version"] == __version__
    assert doc["config"]["seed"] == 7 and doc["config"]["command"] == "gen"
    assert len(doc["instance"]["P"]) == 5


@pytest.mark.parametrize("cmd", ["eval-bht", "eval-biest", "norms", "decompose"])
def test_pipeline_is_deterministic(cmd, instance, tmp_path, capsys):
    outs = []
    dest = tmp_path / f"{cmd}.json"
    for _ in range(2):
        code, summary, _ = _run(capsys, cmd, "--in", str(instance), "--out", str(dest))
        assert code == 0 and summary.strip()
        outs.append(dest.read_bytes())
    assert outs[0] == outs[1]
    assert json.loads(outs[0])["config"]["command"] == cmd


def test_gen_is_deterministic(tmp_path, capsys):
    outs = []
    for _ in range(2):
        code, out, _ = _run(capsys, "gen", "--seed", "3")
        assert code == 0
        outs.append(out)
    assert outs[0] == outs[1]


def test_polytope_interior(capsys):
    code, out, err = _run(capsys, "polytope", "--point", "0.5,0.5,0.5,-0.5")
    assert code == 0
    assert "interior of D" in err
    assert json.loads(out)["classification"]["D"] == "interior"


def test_verify_lacunarity(capsys, tmp_path):
    dest = tmp_path / "lac.json"
    code, out, _ = _run(capsys, "verify", "lacunarity", "--max-scale", "3", "--out", str(dest))
    assert code == 0 and "PASS" in out
    res = json.loads(dest.read_text())["result"]
    assert res["passed"] and res["counterexample"] is None


def test_verify_failure_exit_code(monkeypatch, capsys):
    bad = CheckResult("demo", False, 3, {"where": "here"}, {})
    monkeypatch.setitem(cli.VERIFY_TARGETS, "walsh", lambda a: bad)
    code, _, err = _run(capsys, "verify", "walsh")
    assert code == 1 and "here" in err


@pytest.mark.parametrize("argv", [
    ["nonsense"],
    ["verify", "no-such-target"],
    ["polytope", "--point", "1,1,1,1"],
    ["polytope", "--point", "a,b,c,d"],
    ["polytope", "--point", "0.5,0.5"],
    ["gen", "--window", "1/3,1"],
    ["decompose", "--in", "/no/such/file.json"],
])
def test_usage_errors(argv, capsys):
    code, _, err = _run(capsys, *argv)
    assert code == 2 and err


def test_decompose_bad_theta(instance, capsys):
    code, _, err = _run(capsys, "decompose", "--in", str(instance), "--theta", "1,0,0")
    assert code == 2 and "theta" in err.lower()
