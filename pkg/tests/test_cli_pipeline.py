import json
from dataclasses import replace

import pytest
import yaml

from phasemix.cli import EXIT_INVALID, EXIT_OK, EXIT_RUNTIME, EXIT_VERDICT, main
from phasemix.config import ConfigError, RunConfig, load_config
from phasemix.dataset import read_dataset
from phasemix.pipeline import INCOMPLETE_MARKER, PipelineError, run_pipeline

BASE = {
    "seed": 7,
    "scenarios": [
        {"label": "sym", "state": {"kind": "symmetric", "alpha": 2.0, "beta": 1.5, "gamma": 0.2, "delta": 0.3},
         "samples": 5000},
        {"label": "asym", "state": {"kind": "component_gaussian", "s_cos": 1.0, "s_sin": 2.0}, "samples": 5000},
    ],
    "analysis": {"bootstrap_rounds": 20, "max_order": 8},
}


def _cfg(**changes):
    d = json.loads(json.dumps(BASE))
    d.update(changes)
    return RunConfig.from_dict(d)


def _tree(root):
    return {p.relative_to(root).as_posix(): p.read_bytes() for p in sorted(root.rglob("*")) if p.is_file()}


def test_digest_tracks_meaningful_fields():
    a = _cfg()
    assert a.digest == _cfg().digest
    assert a.digest == _cfg(output={"out_dir": "elsewhere"}, workers=3).digest
    assert a.digest != _cfg(seed=8).digest
    changed = json.loads(json.dumps(BASE))
    changed["scenarios"][0]["state"]["delta"] = 0.31
    assert RunConfig.from_dict(changed).digest != a.digest
    # defaults written out explicitly mean the same run
    explicit = json.loads(json.dumps(BASE))
    explicit["mixing"] = {"kind": "uniform"}
    explicit["analysis"]["significance"] = a.analysis.significance
    assert RunConfig.from_dict(explicit).digest == a.digest


@pytest.mark.parametrize("patch", [
    {"seed": -1},
    {"bogus": 1},
    {"scenarios": []},
    {"scenarios": [{"label": "x", "state": {"kind": "nope"}, "samples": 100}]},
    {"scenarios": [{"label": "x", "state": {"kind": "symmetric", "alpha": 0.1, "beta": 0.1}, "samples": 100}]},
    {"scenarios": [{"label": "x", "state": "vacuum", "samples": 10}]},
    {"scenarios": [{"label": "x", "state": {"kind": "masquerade", "s_cos": 1, "s_sin": 2},
                    "measurement": "hd", "samples": 100}]},
    {"scenarios": [{"label": "a/b", "state": "vacuum", "samples": 100}]},
    {"analysis": {"max_order": 5}},
    {"analysis": {"significance": 2.0}},
    {"output": {"format": "csv"}},
    {"mixing": {"kind": "random_walk"}},
    {"dsp": {"analysis_frequency": 90e6}},
    {"scans": [{"technique": "xd", "state": "vacuum", "settings": [0.0], "per_point": 100}]},
    {"beam_pairs": [{"variance": 1.0, "correlation": 0.5, "samples": 100}]},
])
def test_invalid_configs_rejected(patch):
    with pytest.raises(ConfigError):
        _cfg(**patch)


def test_yaml_and_json_load(tmp_path):
    (tmp_path / "c.yaml").write_text(yaml.safe_dump(BASE))
    (tmp_path / "c.json").write_text(json.dumps(BASE))
    assert load_config(tmp_path / "c.yaml").digest == load_config(tmp_path / "c.json").digest
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "missing.json")


def test_pipeline_outputs(tmp_path):
    res = run_pipeline(_cfg(), tmp_path)
    assert res.summary["verdicts"] == {"sym": True, "asym": False} and not res.passed
    files = _tree(tmp_path)
    assert {"summary.json", "reports/sym.json", "tables/moment_ratios.csv", "tables/histogram_asym.csv",
            "datasets/sym.pmd"} <= set(files)
    digest = _cfg().digest
    for name, data in files.items():
        if name.endswith(".json") or name.endswith(".csv"):
            assert str(digest).encode() in data, name
    assert read_dataset(tmp_path / "datasets/sym.pmd").header["metadata"]["config_digest"] == digest
    asym = json.loads(files["reports/asym.json"])
    assert asym["report"]["verdict"]["4"] is False and asym["asymmetry"]["value"] > 2


def test_pipeline_is_deterministic_across_workers(tmp_path):
    cfg = _cfg(scans=[{"label": "rd", "technique": "rd",
                       "state": {"kind": "symmetric", "alpha": 2.0, "beta": 1.5, "gamma": 0.2, "delta": 0.3},
                       "settings": {"start": -3, "stop": 3, "num": 12}, "per_point": 500}],
               beam_pairs=[{"label": "pair", "variance": 2.0, "correlation": 0.8, "samples": 3000}])
    run_pipeline(cfg, tmp_path / "a")
    run_pipeline(replace(cfg, workers=3), tmp_path / "b")
    assert _tree(tmp_path / "a") == _tree(tmp_path / "b")


def test_stage_failure_marks_incomplete(tmp_path, monkeypatch):
    import phasemix.pipeline as pl

    def boom(*a, **k):
        raise RuntimeError("synthetic failure")

    monkeypatch.setattr(pl, "gaussianity_report", boom)
    with pytest.raises(PipelineError) as err:
        run_pipeline(_cfg(), tmp_path)
    assert err.value.stage == "analyze:sym"
    marker = json.loads((tmp_path / INCOMPLETE_MARKER).read_text())
    assert marker["failed_stage"] == "analyze:sym" and "datasets/sym.pmd" in marker["partial_outputs"]
    assert not (tmp_path / "summary.json").exists()


def test_cli_exit_codes_and_composition(tmp_path, capsys):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps(BASE))
    out = tmp_path / "out"
    assert main(["report", "--config", str(cfg), "--out-dir", str(out), "--quiet"]) == EXIT_VERDICT
    assert main(["simulate", "--config", str(cfg), "--out-dir", str(tmp_path / "sim"), "--format", "text",
                 "--quiet"]) == EXIT_OK
    txt = tmp_path / "sim" / "datasets" / "sym.txt"
    assert txt.exists()
    assert main(["analyze", str(txt), "--bootstrap-rounds", "20", "--max-order", "6", "--quiet"]) == EXIT_OK
    report = json.loads((tmp_path / "sim" / "datasets" / "sym.analysis.json").read_text())
    assert report["blocks"]["0"]["passed"] and report["source"]["sha256"]
    assert main(["fit", str(txt), "--out-dir", str(tmp_path / "fit"), "--quiet"]) == EXIT_OK
    assert (tmp_path / "fit" / "sym.fit.json").exists()
    assert main(["analyze", str(tmp_path / "sim" / "datasets" / "asym.txt"), "--bootstrap-rounds", "20",
                 "--quiet"]) == EXIT_VERDICT
    # a single-setting dataset cannot support a reconstruction
    assert main(["reconstruct", str(txt), "--technique", "hd", "--quiet"]) == EXIT_INVALID


def test_cli_scan_and_reconstruct(tmp_path):
    cfg = dict(BASE, scenarios=[], scans=[{"label": "hd", "technique": "hd", "state": BASE["scenarios"][0]["state"],
                                          "settings": {"start": 0, "stop": 3.1, "num": 10}, "per_point": 400}])
    path = tmp_path / "c.json"
    path.write_text(json.dumps(cfg))
    assert main(["scan", "--config", str(path), "--out-dir", str(tmp_path), "--quiet"]) == EXIT_OK
    assert main(["simulate", "--config", str(path), "--out-dir", str(tmp_path), "--quiet"]) == EXIT_INVALID
    ds = tmp_path / "datasets" / "hd.pmd"
    assert main(["reconstruct", str(ds), "--bootstrap-rounds", "20", "--quiet"]) == EXIT_OK
    rec = json.loads((tmp_path / "datasets" / "hd.reconstruction.json").read_text())
    assert rec["reconstruction"]["inaccessible"] == ["delta"]


def test_cli_invalid_and_runtime_errors(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"seed": "x"}))
    assert main(["report", "--config", str(bad)]) == EXIT_INVALID
    assert "invalid input" in capsys.readouterr().err
    junk = tmp_path / "junk.pmd"
    junk.write_bytes(b"nope\n")
    assert main(["analyze", str(junk)]) == EXIT_INVALID
    assert main(["analyze", str(tmp_path / "missing.pmd")]) == EXIT_RUNTIME
    with pytest.raises(SystemExit) as err:
        main(["report"])
    assert err.value.code == 2
