"""End-to-end command-line behavior: exit codes, artifacts, determinism."""

import json

import pytest

import regularflow.cli as cli
from regularflow.cli import main
from regularflow.regularity import REGULAR, Verdict
from regularflow.scenario import TWO_GAP_BOUND

from conftest import scenario_path


def _write_json(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload))
    return str(path)


def _two_gap_payload(b=3.0):
    return {"domain": {"kind": "box", "lower": [0.0], "upper": [1.0]},
            "force": {"kind": "two_gap", "f1": 2.0, "f2": 1.0, "f3": 3.0,
                      "a": 2.0, "b": b},
            "velocity": "0", "horizon": "inf", "grid": [11]}


def _variable_mass_gap_payload():
    return {"domain": {"kind": "box", "lower": [0.0], "upper": [1.0]},
            "force": {"kind": "one_gap", "f1": 1.0, "f2": 2.0, "a": 2.0},
            "velocity": "0", "mass": "1 + x", "horizon": 3.0, "grid": [11]}


def _grab(path, key):
    for line in path.read_text().splitlines():
        if line.startswith(key + ":"):
            return line.split(":", 1)[1].strip()
    raise AssertionError(f"{key} not found in {path}")


#############################################################
# check
#############################################################


def test_check_regular_exit_and_margin(tmp_path):
    p = _write_json(tmp_path, "tg.json", _two_gap_payload())
    code = main(["check", "--scenario", p, "--out", str(tmp_path)])
    assert code == 0
    out = tmp_path / "verdict.txt"
    assert _grab(out, "outcome") == "Regular"
    assert _grab(out, "criterion") == "two-gap-bound"
    # alpha (a - 1) - (b - a) with alpha = 14/9: exactly 5/9 in floats
    assert float(_grab(out, "margin")) == pytest.approx(5.0 / 9.0, rel=1e-15)
    assert any(line.startswith("trace:")
               for line in out.read_text().splitlines())


def test_check_collision_exit(tmp_path):
    code = main(["check", "--scenario", scenario_path("one_gap_collide"),
                 "--out", str(tmp_path)])
    assert code == 1
    out = tmp_path / "verdict.txt"
    assert _grab(out, "outcome") == "Collision"
    assert "time=" in _grab(out, "witness")


def test_check_inconclusive_exit(tmp_path):
    p = _write_json(tmp_path, "vm.json", _variable_mass_gap_payload())
    code = main(["check", "--scenario", p, "--out", str(tmp_path)])
    assert code == 2
    assert _grab(tmp_path / "verdict.txt", "outcome") == "Inconclusive"


def test_check_unknown_force_kind(tmp_path, capsys):
    payload = _two_gap_payload()
    payload["force"] = {"kind": "warp_drive"}
    p = _write_json(tmp_path, "bad.json", payload)
    code = main(["check", "--scenario", p, "--out", str(tmp_path)])
    assert code == 3
    assert "unknown force kind 'warp_drive'" in capsys.readouterr().err


def test_check_expression_error_names_position(tmp_path, capsys):
    payload = _two_gap_payload()
    payload["velocity"] = "x +* 2"
    p = _write_json(tmp_path, "bad.json", payload)
    code = main(["check", "--scenario", p, "--out", str(tmp_path)])
    assert code == 3
    err = capsys.readouterr().err
    assert "expression parse failure" in err
    assert "line 1" in err and "column 4" in err


def test_check_missing_file_and_bad_grid(tmp_path, capsys):
    assert main(["check", "--scenario", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path)]) == 3
    p = _write_json(tmp_path, "tg.json", _two_gap_payload())
    assert main(["check", "--scenario", p, "--out", str(tmp_path),
                 "--grid", "2"]) == 3
    capsys.readouterr()


def test_check_runs_are_byte_identical(tmp_path):
    outs = []
    for sub in ("a", "b"):
        out = tmp_path / sub
        code = main(["check", "--scenario", scenario_path("smooth_regular"),
                     "--out", str(out)])
        assert code == 0
        outs.append((out / "verdict.txt").read_bytes())
    assert outs[0] == outs[1]


#############################################################
# simulate
#############################################################


def test_simulate_collision_artifacts(tmp_path):
    code = main(["simulate", "--scenario", scenario_path("arctan_collide"),
                 "--out", str(tmp_path), "--grid", "201"])
    assert code == 1
    report = tmp_path / "collision.txt"
    assert _grab(report, "found") == "yes"
    assert float(_grab(report, "t_first")) == pytest.approx(1.0, abs=0.01)
    header = (tmp_path / "trajectory.csv").read_text().splitlines()[0]
    assert header == "t,particle_index,x0,y,v"


def test_simulate_regular_exit(tmp_path):
    code = main(["simulate", "--scenario", scenario_path("smooth_regular"),
                 "--out", str(tmp_path), "--grid", "41"])
    assert code == 0
    assert _grab(tmp_path / "collision.txt", "found") == "no"


#############################################################
# validate
#############################################################


def test_validate_agreement(tmp_path):
    code = main(["validate", "--scenario", scenario_path("one_gap_collide"),
                 "--out", str(tmp_path)])
    assert code == 0
    text = (tmp_path / "validate.txt").read_text()
    assert "status: AGREE" in text
    assert "oracle found: yes" in text


def test_validate_undecided_does_not_fail(tmp_path):
    p = _write_json(tmp_path, "vm.json", _variable_mass_gap_payload())
    code = main(["validate", "--scenario", p, "--out", str(tmp_path)])
    assert code == 0
    assert "status: UNDECIDED" in (tmp_path / "validate.txt").read_text()


def test_validate_directory_sorted_and_deterministic(tmp_path):
    suite = tmp_path / "suite"
    suite.mkdir()
    _write_json(suite, "b_second.json", _two_gap_payload())
    payload = _two_gap_payload()
    payload["force"] = {"kind": "one_gap", "f1": 2.0, "f2": 1.0, "a": 2.0}
    _write_json(suite, "a_first.json", payload)
    blobs = []
    for sub in ("r1", "r2"):
        out = tmp_path / sub
        code = main(["validate", "--scenario", str(suite), "--out", str(out)])
        assert code == 0
        blobs.append((out / "validate.txt").read_bytes())
    assert blobs[0] == blobs[1]
    text = blobs[0].decode()
    assert text.index("scenario: a_first.json") < \
        text.index("scenario: b_second.json")
    assert text.count("status: AGREE") == 2


def test_validate_disagreement_exit(tmp_path, monkeypatch):
    # force a wrong analytic verdict; the oracle must win with exit 4
    fake = Verdict(outcome=REGULAR, criterion=TWO_GAP_BOUND, margin=1.0)
    monkeypatch.setattr(cli.regularity, "check_auto",
                        lambda s: (fake, []))
    code = main(["validate", "--scenario", scenario_path("arctan_collide"),
                 "--out", str(tmp_path)])
    assert code == 4
    assert "status: DISAGREE" in (tmp_path / "validate.txt").read_text()


#############################################################
# field / report
#############################################################


def test_field_artifacts(tmp_path):
    payload = {"domain": {"kind": "box", "lower": [0.0], "upper": [1.0]},
               "force": {"kind": "smooth1d", "f": "0"},
               "velocity": "x", "density": "1", "horizon": 3.0,
               "grid": [17]}
    p = _write_json(tmp_path, "fs.json", payload)
    code = main(["field", "--scenario", p, "--out", str(tmp_path)])
    assert code == 0
    header = (tmp_path / "field.csv").read_text().splitlines()[0]
    assert header == "t,y,u,rho_transport,rho_pushforward,res_euler,res_continuity"
    info = tmp_path / "field.txt"
    assert float(_grab(info, "mass_initial")) == pytest.approx(1.0, abs=1e-9)
    assert float(_grab(info, "mass_final")) == pytest.approx(1.0, abs=1e-6)


def test_field_requires_finite_horizon(tmp_path, capsys):
    code = main(["field", "--scenario", scenario_path("one_gap_regular"),
                 "--out", str(tmp_path)])
    assert code == 3
    assert "horizon" in capsys.readouterr().err


def test_report_lists_assumptions(tmp_path):
    code = main(["report", "--scenario", scenario_path("one_gap_regular"),
                 "--out", str(tmp_path)])
    assert code == 0
    lines = (tmp_path / "assumptions.txt").read_text().splitlines()
    rows = [l for l in lines if l.startswith("criterion: ")]
    assert rows
    assert all("satisfied:" in r for r in rows)
