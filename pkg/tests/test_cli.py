import json
from fractions import Fraction

import pytest

from gk.bundle import build_bundle
from gk.cli import JobSpec, main, run_job
from gk.geometries import builtin_base


def write(path, obj):
    path.write_text(json.dumps(obj))
    return path


def run(argv, capsys):
    code = main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def broken_threefold(path):
    """P(O + O(1)) over P^2 used as a base, with z*H^2 doubled."""
    alg = build_bundle(builtin_base("P2:0;1")).algebra
    data = alg.to_json()
    for e in data["mult"]:
        if {e["i"], e["j"]} == {"z", "H^2"}:
            e["coords"] = {"H^2*z": "2"}
    data.update(nef=["H", "z"], canonical={"H": "-2", "z": "-2"},
                bundles=[{"label": "L0", "coords": {}}, {"label": "L1", "coords": {}}])
    return write(path, data)


def test_full_job_passes(tmp_path, capsys):
    job = write(tmp_path / "job.json", {"geometry": "F1", "checks": "all", "box": [3, 3],
                                        "output": {"path": "report.json", "format": "json"}})
    code, out, _ = run(["run", str(job)], capsys)
    assert code == 0
    assert out.startswith("pass")
    report = json.loads((tmp_path / "report.json").read_text())
    checks = [r["check"] for r in report["reports"]]
    assert checks == sorted(checks)
    assert set(checks) == {"algebra", "asymptotics", "dmodule", "expand-i", "grading", "no-fiber",
                           "pure-fiber", "qhsp", "toric"}
    assert all(r["anchor"] and r["box"] == "(3,3)" for r in report["reports"])
    meta = json.loads((tmp_path / "report.json.meta.json").read_text())
    assert "construction" in meta["wall_clock_seconds"]
    assert "started" not in (tmp_path / "report.json").read_text()


def test_projective_plane_dmodule_job(tmp_path, capsys):
    job = write(tmp_path / "p2.json", {"geometry": "P2", "checks": ["dmodule"], "box": 4})
    code, out, _ = run(["run", str(job)], capsys)
    assert code == 0
    assert json.loads(out)["status"] == "pass"


def test_corrupted_table_is_reported(tmp_path, capsys):
    geo = broken_threefold(tmp_path / "bad.json")
    job = write(tmp_path / "job.json", {"geometry": "bad.json", "checks": ["grading"], "box": 1})
    code, out, _ = run(["run", str(job)], capsys)
    assert code == 1
    assert "associativity failed at (" in out
    code, out, _ = run(["validate", str(geo)], capsys)
    assert code == 1
    assert "associativity failed at (" in out


def test_text_output(tmp_path, capsys):
    job = write(tmp_path / "job.json", {"geometry": "F2", "checks": ["asymptotics", "grading"], "box": 2,
                                        "output": {"path": "out.txt", "format": "text"}})
    code, _, _ = run(["run", str(job)], capsys)
    assert code == 1
    text = (tmp_path / "out.txt").read_text()
    assert "FAIL  asymptotics" in text and "PASS  grading" in text


@pytest.mark.parametrize(
    "job,message",
    [
        ({"geometry": "F1", "checks": ["nope"], "box": 1}, "unknown check 'nope'"),
        ({"geometry": "F1", "box": 1}, "missing field 'checks'"),
        ({"geometry": "F1", "checks": ["grading"], "box": 1, "schema": 7}, "unsupported version"),
        ({"geometry": "F9", "checks": ["grading"], "box": 1}, "unknown builtin"),
        ({"geometry": "F1", "checks": ["grading"], "box": "x"}, "box"),
        ({"geometry": "F1", "checks": ["grading"], "box": 1, "output": {"format": "xml"}}, "format"),
        ({"geometry": "missing.json", "checks": ["grading"], "box": 1}, "not found"),
    ],
)
def test_input_errors(tmp_path, capsys, job, message):
    path = write(tmp_path / "job.json", job)
    code, _, err = run(["run", str(path)], capsys)
    assert code == 2
    assert message in err


def test_invalid_json(tmp_path, capsys):
    path = tmp_path / "job.json"
    path.write_text("{\"geometry\": ")
    code, _, err = run(["run", str(path)], capsys)
    assert code == 2 and "line 1" in err


def test_coefficient_cap(monkeypatch, capsys):
    monkeypatch.setenv("GK_COEFF_CAP", "10")
    code, _, err = run(["expand-i", "--geometry", "F1", "--order", "3,3"], capsys)
    assert code == 2 and "GK_COEFF_CAP" in err
    monkeypatch.setenv("GK_COEFF_CAP", "16")
    assert run(["expand-i", "--geometry", "F1", "--order", "3,3"], capsys)[0] == 0


def test_expand_i_order(capsys):
    code, out, _ = run(["expand-i", "--geometry", "F1", "--order", "1,1"], capsys)
    assert code == 0
    data = json.loads(out)
    assert [d["class"] for d in data] == ["(0; 0)", "(0; 1)", "(1; 0)", "(1; 1)"]
    assert data[1]["coefficient"] == {"-2": {"H": "-1", "z": "1"}, "-3": {"H*z": "-2"}}


def test_expand_i_from_file(tmp_path, capsys):
    geo = write(tmp_path / "f1.json", builtin_base("F1").to_json())
    code, out, _ = run(["expand-i", "--geometry", str(geo), "--order", "2"], capsys)
    code2, out2, _ = run(["expand-i", "--geometry", "F1", "--order", "2"], capsys)
    assert code == code2 == 0 and out == out2


def test_single_check_commands(tmp_path, capsys):
    geo = write(tmp_path / "f1.json", builtin_base("F1").to_json())
    assert run(["check-toric", "--bundle", str(geo), "--order", "3"], capsys)[0] == 0
    assert run(["check-qhsp", "--bundle", "P2:0;1", "--order", "2"], capsys)[0] == 0
    code, out, _ = run(["check-dmodule", "--n", "2", "--order", "3", "--format", "text"], capsys)
    assert code == 0 and out.startswith("geometry P2")
    assert run(["validate", "P1xP1:0,0;1,1"], capsys)[0] == 0


def test_validate_reports_canonical_class(capsys):
    code, out, _ = run(["validate", "F1"], capsys)
    data = json.loads(out)["reports"][0]["data"]
    assert code == 0
    assert data["canonical_class"] == {"H": "-1", "z": "-2"}
    assert data["dims"] == {"base": 2, "bundle": 4}


def test_no_fiber_precondition_is_reported(tmp_path, capsys):
    job = write(tmp_path / "job.json", {"geometry": "P1:0;-1", "checks": ["no-fiber"], "box": 1})
    code, out, _ = run(["run", str(job)], capsys)
    assert code == 1
    rep = [r for r in json.loads(out)["reports"] if r["check"] == "no-fiber"][0]
    assert "not nef" in rep["failures"][0]["precondition"]


def test_run_job_is_deterministic():
    spec = JobSpec("F1", ["asymptotics", "expand-i", "toric"], [2, 2])
    a = run_job(spec)[1]
    b = run_job(spec)[1]
    assert json.dumps(a, sort_keys=True) == json.dumps(b, sort_keys=True)
    assert Fraction(a["reports"][2]["data"]["coefficients"][1]["coefficient"]["-2"]["z"]) == 1
