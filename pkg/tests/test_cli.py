import csv
import json
import re

import jsonschema
import numpy as np
import pytest

from sgcalc.cli import EXPLAIN, TASK_KINDS, ScenarioError, corpus_list, explain, load_scenario, main, report_schema, run

CORPUS = ["degenerate", "equivalence-pair", "fourier", "kg", "roundtrip"]


def write(tmp_path, doc, name="scenario.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return path


def fourier_doc(**extra_tasks):
    return {
        "name": "small",
        "dims": {"d": 1, "s": 1},
        "definitions": {
            "phi": {"kind": "phase", "expr": "dot(x,t)", "triple": ["dot(x,t)"] * 3},
            "one": {"kind": "amplitude", "expr": 1},
            "u": {"kind": "test-function", "width": 1.0},
        },
        "tasks": [
            {"id": "adm", "kind": "check-phase", "phase": "phi"},
            {"id": "cloud", "kind": "stationary", "phase": "phi"},
            {"id": "pair", "kind": "oscint", "phase": "phi", "amplitude": "one", "test_function": "u", "reference": 2 * np.pi},
            {"id": "probe", "kind": "wavefront", "phase": "phi", "amplitude": "one", "locations": [0, 2], "directions": [1]},
        ],
    }


@pytest.fixture(scope="module")
def corpus_runs(tmp_path_factory):
    out = {}
    for name in CORPUS:
        d = tmp_path_factory.mktemp(name)
        report, code = run(name, d, ci=True)
        out[name] = (report, code, d)
    return out


# --- corpus -------------------------------------------------------------------------------


def test_corpus_list_contains_required_scenarios():
    names = [c["name"] for c in corpus_list()]
    assert "fourier" in names
    assert set(CORPUS) <= set(names)


def test_corpus_command_prints_names(capsys):
    assert main(["corpus"]) == 0
    printed = capsys.readouterr().out
    for name in CORPUS:
        assert name in printed


@pytest.mark.parametrize("name", CORPUS)
def test_corpus_meets_expectations_in_ci_mode(corpus_runs, name):
    report, code, out = corpus_runs[name]
    assert code == 0, [t for t in report["tasks"] if not t["met_expectation"]]
    assert all(t["met_expectation"] for t in report["tasks"])
    jsonschema.validate(json.loads((out / "report.json").read_text()), report_schema())
    for t in report["tasks"]:
        for f in t["files"]:
            assert (out / f).is_file()


def test_degenerate_is_pass_of_expectation(corpus_runs):
    report, code, _ = corpus_runs["degenerate"]
    (task,) = report["tasks"]
    assert task["verdict"] == "fail" and task["expected"] == "fail" and task["met_expectation"]
    assert code == 0


def test_fourier_records_two_pi(corpus_runs):
    report, _, _ = corpus_runs["fourier"]
    pairing = next(t for t in report["tasks"] if t["kind"] == "oscint")
    re_, im = pairing["numbers"]["oscint"]["value"]
    assert abs(re_ - 2 * np.pi) <= 0.01 * 2 * np.pi and abs(im) <= 1e-6
    assert report["summary"]["passed"] == report["summary"]["tasks"]


def test_fourier_strict_exit_zero(tmp_path, capsys):
    assert main(["run", "fourier", "--out", str(tmp_path)]) == 0
    assert "6/6 passed" in capsys.readouterr().out


def test_equivalence_pair_verdicts(corpus_runs):
    report, _, _ = corpus_runs["equivalence-pair"]
    got = {t["id"]: t["detail"] for t in report["tasks"]}
    assert got == {
        "fiber-change": "equivalent (principal level)",
        "shifted": "Lagrangians differ",
        "signature": "signature mismatch",
    }


def test_kg_stationary_and_roundtrip(corpus_runs):
    report, _, out = corpus_runs["kg"]
    tasks = {t["id"]: t for t in report["tasks"]}
    assert tasks["stationary"]["numbers"]["faces"]["psi"]["count"] == 2
    rows = list(csv.DictReader(open(out / "stationary_cloud.csv")))
    pairs = sorted((float(r["x1"]), float(r["xi1"])) for r in rows)
    np.testing.assert_allclose(pairs, [(-1, -1), (1, 1)], atol=1e-9)
    assert max(v for v in tasks["roundtrip"]["numbers"]["roundtrip"]["hausdorff"].values()) <= 1e-6


def test_planted_gate_recorded_as_failure(corpus_runs):
    report, _, _ = corpus_runs["roundtrip"]
    planted = next(t for t in report["tasks"] if t["id"] == "planted-gate")
    assert planted["failed"] and "violates conormality" in planted["error"]


# --- exit codes -------------------------------------------------------------------------


def test_non_admissible_phase_exits_one_with_witness(tmp_path):
    doc = {
        "name": "x1t1",
        "dims": {"d": 2, "s": 1},
        "definitions": {"phi": {"kind": "phase", "expr": "x1*t1"}},
        "tasks": [{"kind": "check-phase", "phase": "phi"}],
    }
    code = main(["run", str(write(tmp_path, doc)), "--out", str(tmp_path / "out")])
    assert code == 1
    report = json.loads((tmp_path / "out" / "report.json").read_text())
    adm = report["tasks"][0]["numbers"]["admissibility"]
    assert adm["verdict"] == "not admissible"
    assert adm["witness"]["ratio"] == 0.0


def test_undefined_name_exits_two(tmp_path, capsys):
    doc = fourier_doc()
    doc["tasks"][0]["phase"] = "phi9"
    code = main(["run", str(write(tmp_path, doc)), "--out", str(tmp_path / "out")])
    assert code == 2
    assert "phi9" in capsys.readouterr().err
    assert not (tmp_path / "out").exists()


@pytest.mark.parametrize(
    "mutate, message",
    [
        (lambda d: d["definitions"]["phi"].update(expr="dot(x,t"), "phi"),
        (lambda d: d["tasks"][0].update(phase="one"), "expected phase"),
        (lambda d: d["tasks"].append({"kind": "frobnicate"}), "does not validate"),
        (lambda d: d["tasks"].append({"kind": "oscint", "phase": "phi"}), "amplitude"),
        (lambda d: d["tasks"].append({"id": "adm", "kind": "check-phase", "phase": "phi"}), "unique"),
        (lambda d: d["definitions"].update(u={"kind": "test-function", "envelope": [[-1.0]]}), "positive definite"),
        (lambda d: d["definitions"].update(big={"kind": "phase", "d": 2, "s": 2, "expr": "dot(x,t)"})
         or d["tasks"].append({"kind": "equivalence", "phase": "phi", "other": "big"}), "inconsistent dimensions"),
        (lambda d: d["tasks"].append({"kind": "parametrize"}), "exactly one"),
    ],
)
def test_input_errors_exit_two(tmp_path, capsys, mutate, message):
    doc = fourier_doc()
    mutate(doc)
    assert main(["run", str(write(tmp_path, doc)), "--out", str(tmp_path / "out")]) == 2
    assert message in capsys.readouterr().err


def test_unreadable_inputs_exit_two(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 2
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    assert main(["run", str(bad), "--out", str(tmp_path)]) == 2
    with pytest.raises(ScenarioError):
        load_scenario(bad)


def test_failed_task_keeps_partial_outputs(tmp_path):
    doc = fourier_doc()
    doc["definitions"]["flat"] = {"kind": "phase", "expr": "x1 + 0*t1"}
    doc["tasks"].insert(0, {"id": "diverges", "kind": "oscint", "phase": "flat", "amplitude": "one", "test_function": "u"})
    report, code = run(write(tmp_path, doc), tmp_path / "out")
    assert code == 1
    first = report["tasks"][0]
    assert first["failed"] and first["verdict"] == "fail" and "regularization unstable" in first["error"]
    # later tasks still ran and wrote their files
    assert all(t["verdict"] == "pass" for t in report["tasks"][1:])
    assert (tmp_path / "out" / "cloud_cloud.csv").is_file()
    assert (tmp_path / "out" / "probe_probes.csv").is_file()


def test_expected_failure_fails_strict_but_passes_ci(tmp_path):
    doc = fourier_doc()
    doc["definitions"]["flat"] = {"kind": "phase", "expr": "x1 + 0*t1"}
    doc["tasks"] = [
        {"kind": "oscint", "phase": "flat", "amplitude": "one", "test_function": "u", "expect": "fail",
         "expect_error": "regularization unstable"}
    ]
    path = write(tmp_path, doc)
    assert run(path, tmp_path / "a")[1] == 1
    assert run(path, tmp_path / "b", ci=True)[1] == 0
    doc["tasks"][0]["expect_error"] = "something else"
    assert run(write(tmp_path, doc), tmp_path / "c", ci=True)[1] == 1


# --- determinism and schema ------------------------------------------------------------------


def _strip_wall_times(text):
    return re.sub(r'"wall_time_s": [0-9.eE+-]+', '"wall_time_s": 0', text)


def test_reports_are_deterministic(tmp_path):
    path = write(tmp_path, fourier_doc())
    main(["run", str(path), "--out", str(tmp_path / "a"), "--seed", "3"])
    main(["run", str(path), "--out", str(tmp_path / "b"), "--seed", "3"])
    a = (tmp_path / "a" / "report.json").read_text()
    b = (tmp_path / "b" / "report.json").read_text()
    assert _strip_wall_times(a) == _strip_wall_times(b)
    for f in ("cloud_cloud.csv", "probe_probes.csv"):
        assert (tmp_path / "a" / f).read_bytes() == (tmp_path / "b" / f).read_bytes()


def test_parallel_probes_match_serial(tmp_path):
    path = write(tmp_path, fourier_doc())
    ra, _ = run(path, tmp_path / "a")
    from sgcalc.cli import RunConfig

    rb, _ = run(path, tmp_path / "b", RunConfig(parallel=3))
    assert ra["tasks"][3]["numbers"] == rb["tasks"][3]["numbers"]
    assert (tmp_path / "a" / "probe_probes.csv").read_bytes() == (tmp_path / "b" / "probe_probes.csv").read_bytes()


def test_flags_are_echoed(tmp_path):
    path = write(tmp_path, fourier_doc())
    args = ["run", str(path), "--out", str(tmp_path), "--seed", "7", "--eps-ell", "1e-5", "--newton-tol", "1e-11", "--parallel", "2"]
    assert main(args) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["seed"] == 7
    assert report["config"] == {"seed": 7, "eps_ell": 1e-5, "newton_tol": 1e-11, "parallel": 2, "mode": "strict"}
    assert report["tasks"][0]["numbers"]["admissibility"]["eps_ell"] == 1e-5
    assert report["schema_version"] == "1.0"


def test_schema_rejects_malformed_reports(tmp_path):
    report, _ = run(write(tmp_path, fourier_doc()), tmp_path / "out")
    schema = report_schema()
    jsonschema.validate(report, schema)
    broken = json.loads(json.dumps(report))
    del broken["summary"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(broken, schema)
    broken = json.loads(json.dumps(report))
    broken["tasks"][0]["failed"] = True  # a failed marker needs an error message
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(broken, schema)
    broken = json.loads(json.dumps(report))
    broken["schema_version"] = "0.9"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(broken, schema)


# --- explain ---------------------------------------------------------------------------------


@pytest.mark.parametrize("task", TASK_KINDS)
def test_explain_covers_every_task(task, capsys):
    assert main(["explain", task]) == 0
    text = capsys.readouterr().out
    assert text.startswith(task) and len(text) > 200
    assert not re.search(r"§|\bSection\b|\bEq\.|\bTheorem\b|\bLemma\b|\b\d+\.\d+\b", text)


def test_explain_rejects_unknown_task():
    assert set(EXPLAIN) == set(TASK_KINDS)
    with pytest.raises(ScenarioError):
        explain("nonsense")
    with pytest.raises(SystemExit):
        main(["explain", "nonsense"])
