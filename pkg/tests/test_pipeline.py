import json

import numpy as np
import pytest

from qisomap import io, pipeline
from qisomap.cli import main
from qisomap.errors import DirtyAncilla, Disconnected
from qisomap.pipeline import RunConfig, emit_artifacts, run_pipeline


def cfg(**kw):
    base = dict(dataset={"name": "blob", "n": 8, "noise": 0.0, "seed": 3}, precision_bits=12,
                exact_means=True, spectrum_shots=10_000, tomography_copies=100_000)
    base.update(kw)
    return RunConfig(**base)


def test_config_validation():
    with pytest.raises(ValueError):
        RunConfig(target_dim=0)
    with pytest.raises(ValueError):
        RunConfig(spectrum_shots=0)
    with pytest.raises(ValueError):
        RunConfig(dataset={"name": "blob", "n": 65})
    with pytest.raises(ValueError):
        RunConfig.from_dict({"bogus": 1})


def test_config_round_trip():
    c = cfg(fp_format={"l": 24, "f": 10})
    assert RunConfig.from_dict(json.loads(json.dumps(c.to_dict()))) == c


def test_stage_streams_are_independent():
    a = pipeline.stage_rng(5, "means").random(4)
    b = pipeline.stage_rng(5, "qsve").random(4)
    assert not np.array_equal(a, b)
    assert np.array_equal(a, pipeline.stage_rng(5, "means").random(4))


def test_blob_run_meets_fidelity():
    r = run_pipeline(cfg())
    assert r.ok
    assert r.metrics["procrustes_relative"] <= 0.02
    st = r.diagnostics["stages"]
    assert st["qfloyd"]["floyd_match"]
    assert 0 < st["qfloyd"]["success_probability"] <= 1
    assert 0 < st["gramprep"]["success_probability"] <= 1


def test_two_point_dataset(tmp_path):
    pts = np.array([[0.0, 0.0], [1.3, 0.0]])
    io.write_points(tmp_path / "two.csv", pts)
    r = run_pipeline(cfg(dataset={"path": str(tmp_path / "two.csv")}, target_dim=1, fraction_bits=10))
    q = round(1.3 * 2 ** 10) / 2 ** 10
    tol = 2 ** -10 + 2 * np.pi * 2 ** -12 * 2
    for Z in (r.classical.Z, r.quantum.Z):
        assert abs(abs(Z[0, 0] - Z[1, 0]) - q) <= tol


def test_sampled_means_improve_with_budget():
    errs = []
    for m in (10, 100, 1000, 10_000):
        vals = [run_pipeline(cfg(exact_means=False, mean_samples=m, seed=s)).metrics["procrustes_error"]
                for s in range(6)]
        errs.append(np.mean(vals))
    assert errs[-1] < errs[0]
    assert np.all(np.diff(errs) < 0)


def test_disconnected_needs_override():
    c = cfg(dataset={"name": "circle", "n": 12, "noise": 0.0, "seed": 0}, knn_k=1)
    with pytest.raises(Disconnected):
        run_pipeline(c)
    r = run_pipeline(cfg(dataset={"name": "circle", "n": 12, "noise": 0.0, "seed": 0}, knn_k=1,
                         allow_disconnected=True))
    assert r.diagnostics["stages"]["qfloyd"]["disconnected"]


def test_artifacts(tmp_path):
    r = run_pipeline(cfg())
    paths = emit_artifacts(r, tmp_path)
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(p.name for p in paths)
    assert len(paths) == 5
    metrics = json.loads((tmp_path / "metrics.json").read_text())
    assert metrics["procrustes_error"] == pytest.approx(r.metrics["procrustes_error"])
    Zq = io.read_matrix(tmp_path / "embedding_quantum.csv")
    assert Zq.shape == (8, 2)
    assert np.array_equal(Zq, r.quantum.Z)
    diag = json.loads((tmp_path / "diagnostics.json").read_text())
    assert diag["ok"] and diag["seed"] == 0


def test_config_echo_reproduces_report(tmp_path):
    r = run_pipeline(cfg(exact_means=False, seed=11))
    emit_artifacts(r, tmp_path)
    again = run_pipeline(RunConfig.load(tmp_path / "config.json"))
    assert again.metrics == r.metrics
    assert np.array_equal(again.quantum.Z, r.quantum.Z)


def test_failed_ancilla_check_sets_exit_code(tmp_path, monkeypatch):
    def broken(*a, **k):
        raise DirtyAncilla("forced", stage="gramprep")

    monkeypatch.setattr(pipeline.gramprep, "build_gram_register", broken)
    (tmp_path / "cfg.json").write_text(json.dumps(cfg().to_dict()))
    code = main(["run", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / "out")])
    assert code != 0
    diag = json.loads((tmp_path / "out" / "diagnostics.json").read_text())
    assert not diag["stages"]["gramprep"]["ok"]
    assert "DirtyAncilla" in diag["stages"]["gramprep"]["error"]


def test_cli_run_is_byte_identical(tmp_path):
    (tmp_path / "cfg.json").write_text(json.dumps(cfg(exact_means=False).to_dict()))
    outs = []
    for name in ("a", "b"):
        assert main(["run", "--config", str(tmp_path / "cfg.json"), "--out", str(tmp_path / name)]) == 0
        outs.append({p.name: p.read_bytes() for p in (tmp_path / name).iterdir()})
    assert outs[0] == outs[1]


def test_cli_gen_floyd_classical(tmp_path, capsys):
    pts = tmp_path / "pts.csv"
    assert main(["gen", "--name", "swiss_roll", "--n", "12", "--seed", "7", "--out", str(pts)]) == 0
    assert io.read_points(pts).shape == (12, 3)
    W = np.array([[0, 1, 5], [1, 0, 1], [5, 1, 0]], dtype=float)
    io.write_matrix(tmp_path / "adj.csv", W)
    assert main(["floyd", "--adj", str(tmp_path / "adj.csv"), "--out", str(tmp_path / "d.csv")]) == 0
    assert io.read_matrix(tmp_path / "d.csv")[0, 2] == 2.0
    assert main(["classical", "--pts", str(pts), "--d", "2"]) == 0
    rows = capsys.readouterr().out.strip().splitlines()
    assert len(rows) == 12 and len(rows[0].split(",")) == 2


def test_cli_reports_errors(tmp_path, capsys):
    assert main(["gen", "--name", "blob", "--n", "100", "--out", str(tmp_path / "x.csv")]) == 2
    assert "error" in capsys.readouterr().err
