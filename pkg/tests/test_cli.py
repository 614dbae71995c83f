import json

import pytest

from pacompete.cli import EXIT_CONFIG, EXIT_OK, EXIT_VERIFY, config_digest, main

HALF_PHI = {"model": "multiplicative", "m": 3, "p": [0, "1/2", "1/2", 1], "multiplicative": {"phi": "7/6"}}
MAJORITY = {"model": "multiplicative", "m": 3, "p": [0, 0, "9/10", 1], "multiplicative": {"phi": 1.2}}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


def last_json(capsys):
    return json.loads(capsys.readouterr().out.strip().splitlines()[-1])


def test_analyze_report_and_plot(tmp_path, capsys):
    out = tmp_path / "a"
    rc = main(["analyze", "--config", write_config(tmp_path, HALF_PHI), "--out", str(out)])
    assert rc == EXIT_OK
    summary = last_json(capsys)
    assert not summary["degenerate"]
    assert [z["class"] for z in summary["zeros"]] == ["endpoint_unstable", "stable", "endpoint_unstable"]
    assert summary["zeros"][1]["location"] == pytest.approx(0.19967453127803182, abs=1e-12)
    assert (out / "report.json").exists() and "<svg" in (out / "competition.svg").read_text()
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"report.json", "competition.svg"}


def test_analyze_csv_format(tmp_path):
    out = tmp_path / "a"
    cfg = {**HALF_PHI, "analyze": {"plot": False}}
    assert main(["analyze", "--config", write_config(tmp_path, cfg), "--out", str(out), "--format", "csv"]) == EXIT_OK
    lines = (out / "zeros.csv").read_text().splitlines()
    assert lines[0] == "location,class,derivative" and len(lines) == 4


def test_analyze_linear_is_degenerate(tmp_path, capsys):
    cfg = {"model": "plain", "m": 3, "p": "linear", "analyze": {"plot": False}}
    assert main(["analyze", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_OK
    assert last_json(capsys)["degenerate"] is True


@pytest.mark.parametrize(
    "cfg",
    [
        {**HALF_PHI, "multiplicative": {"phi": 0}},
        {"model": "plain", "m": 2, "p": [0, "1/2", 1], "plain": {"alpha": -2}},
        {"model": "nonsense", "m": 2},
        {"model": "additive", "m": 2, "p": [0, 1, 1], "additive": {"alpha1": 0}},
        {"model": "multiplicative", "m": 2, "p": [0, "x", 1], "multiplicative": {"phi": 1}},
    ],
)
def test_bad_model_is_config_error(tmp_path, cfg):
    assert main(["analyze", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_unreadable_config(tmp_path):
    (tmp_path / "bad.json").write_text("{not json")
    assert main(["analyze", "--config", str(tmp_path / "bad.json")]) == EXIT_CONFIG
    assert main(["analyze", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


def test_ensemble_zero_runs(tmp_path):
    cfg = {**MAJORITY, "ensemble": {"runs": 0, "steps": 100}}
    assert main(["ensemble", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_ensemble_json_and_thread_independence(tmp_path):
    cfg = {**MAJORITY, "ensemble": {"runs": 20, "steps": 2000, "per_run_terminals": True}}
    path = write_config(tmp_path, cfg)
    assert main(["ensemble", "--config", path, "--out", str(tmp_path / "one"), "--seed", "5"]) == EXIT_OK
    assert main(["ensemble", "--config", path, "--out", str(tmp_path / "two"), "--seed", "5", "--threads", "2"]) == EXIT_OK
    one = json.loads((tmp_path / "one" / "ensemble.json").read_text())
    two = json.loads((tmp_path / "two" / "ensemble.json").read_text())
    assert one == two
    assert sum(one["counts"].values()) == 20 and len(one["per_run_terminals"]) == 20
    assert one["master_seed"] == 5


def test_ensemble_csv(tmp_path):
    cfg = {**MAJORITY, "ensemble": {"runs": 4, "steps": 500}}
    out = tmp_path / "o"
    assert main(["ensemble", "--config", write_config(tmp_path, cfg), "--out", str(out), "--format", "csv"]) == EXIT_OK
    lines = (out / "ensemble.csv").read_text().splitlines()
    assert lines[0] == "run,outcome,terminal" and len(lines) == 5


def test_scan_locates_boundary(tmp_path, capsys):
    cfg = {**MAJORITY, "scan": {"vary": "phi", "start": 1.0, "stop": 1.6, "step": 0.01}}
    out = tmp_path / "o"
    assert main(["scan", "--config", write_config(tmp_path, cfg), "--out", str(out), "--format", "csv"]) == EXIT_OK
    transitions = last_json(capsys)["transitions"]
    assert any(abs(t - 20 / 13) < 0.01 for t in transitions)
    assert (out / "bifurcation.csv").read_text().startswith("param,root,class,derivative\n")


def test_scan_needs_grid(tmp_path):
    cfg = {**MAJORITY, "scan": {"vary": "phi", "start": 1.0}}
    assert main(["scan", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG
    cfg = {**MAJORITY, "scan": {"vary": "alpha1", "values": [1, 2]}}
    assert main(["scan", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "o")]) == EXIT_CONFIG


def test_flag_overrides_config(tmp_path):
    cfg = {**MAJORITY, "seed": 11, "format": "csv", "simulate": {"steps": 200}}
    path = write_config(tmp_path, cfg)
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "a")]) == EXIT_OK
    manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
    assert manifest["master_seed"] == 11 and "trajectory.csv" in manifest["outputs"]
    assert main(["simulate", "--config", path, "--out", str(tmp_path / "b"), "--seed", "12", "--format", "json"]) == EXIT_OK
    manifest = json.loads((tmp_path / "b" / "manifest.json").read_text())
    assert manifest["master_seed"] == 12 and "trajectory.json" in manifest["outputs"]


@pytest.mark.parametrize("flags", [["--seed", "-1"], ["--threads", "0"]])
def test_bad_common_flags(tmp_path, flags):
    assert main(["simulate", "--config", write_config(tmp_path, MAJORITY), "--out", str(tmp_path / "o"), *flags]) == EXIT_CONFIG


def test_manifest_reproduces_outputs(tmp_path):
    cfg = {"model": "additive", "m": 2, "p": [0, "7/10", 1], "additive": {"alpha1": 0, "alpha2": 1},
           "simulate": {"steps": 3000, "record_every": 100}}
    first = tmp_path / "first"
    assert main(["simulate", "--config", write_config(tmp_path, cfg), "--out", str(first), "--seed", "3", "--format", "csv"]) == EXIT_OK
    manifest = json.loads((first / "manifest.json").read_text())
    assert manifest["rng"] and manifest["config_digest"] == config_digest(manifest["config"])
    second = tmp_path / "second"
    assert main(["simulate", "--config", str(first / "manifest.json"), "--out", str(second)]) == EXIT_OK
    assert (first / "trajectory.csv").read_bytes() == (second / "trajectory.csv").read_bytes()
    again = json.loads((second / "manifest.json").read_text())
    assert again["outputs"] == manifest["outputs"]


def test_config_digest_ignores_presentation():
    base = {**MAJORITY, "seed": 1}
    assert config_digest({**base, "out": "x", "threads": 4, "format": "csv"}) == config_digest(base)
    assert config_digest({**base, "seed": 2}) != config_digest(base)


def test_verify_subset_passes(tmp_path, capsys):
    rc = main(["verify", "--suite", "drift", "--suite", "enumeration", "--out", str(tmp_path / "v")])
    assert rc == EXIT_OK
    assert capsys.readouterr().out.splitlines() == ["PASS drift", "PASS enumeration"]


def test_verify_unknown_suite_in_config(tmp_path):
    cfg = {"verify": {"suites": ["drift", "nope"]}}
    assert main(["verify", "--config", write_config(tmp_path, cfg), "--out", str(tmp_path / "v")]) == EXIT_CONFIG


def test_verify_default_exit_code_tracks_suites(tmp_path, capsys):
    out = tmp_path / "v"
    rc = main(["verify", "--out", str(out)])
    doc = json.loads((out / "verify.json").read_text())
    assert rc == (EXIT_OK if not doc["failed"] else EXIT_VERIFY)
    # the decrease bound with S2 = sup g does not hold on all of D; every other suite passes
    assert doc["failed"] == ["lyapunov_bound"]
    lines = capsys.readouterr().out.splitlines()
    assert "FAIL lyapunov_bound" in lines and "PASS drift" in lines
