"""End-to-end run: dataset, quantum pipeline, classical oracle, metrics, artifacts."""

from __future__ import annotations

import dataclasses
import json
import logging
import time
import warnings
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from . import gramprep, io, oracle, qfloyd, qsve
from . import regsim as rs
from .datasets import MAX_POINTS, generate_dataset
from .errors import DirtyAncilla, Disconnected, DisconnectedWarning
from .fixedpoint import FpFormat, encode_array

log = logging.getLogger(__name__)


@dataclass
class RunConfig:
    dataset: dict = field(default_factory=lambda: {"name": "swiss_roll", "n": 16, "noise": 0.0, "seed": 0})
    knn_k: int = 5
    target_dim: int = 2
    fp_format: Any = "auto"
    fraction_bits: int = 12
    precision_bits: int = 10
    eta: float = 0.9
    mean_samples: int | None = None
    mean_epsilon: float = 0.05
    mean_delta: float = 0.05
    mean_sample_cap: int = gramprep.DEFAULT_SAMPLE_CAP
    mean_source: str = "register"
    spectrum_shots: int = 10_000
    tomography_copies: int = 100_000
    exact_means: bool = False
    square_distances: bool = True
    sign_oracle: bool = True
    allow_disconnected: bool = False
    max_label_bits: int = rs.DEFAULT_MAX_BITS
    record_timings: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.target_dim < 1:
            raise ValueError("target_dim must be at least 1")
        for name in ("spectrum_shots", "tomography_copies", "knn_k", "mean_sample_cap"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be at least 1")
        if self.mean_samples is not None and self.mean_samples < 1:
            raise ValueError("mean_samples must be at least 1")
        if "path" not in self.dataset and int(self.dataset.get("n", 0)) > MAX_POINTS:
            raise ValueError(f"at most {MAX_POINTS} points")

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "RunConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


@dataclass
class RunReport:
    config: RunConfig
    points: np.ndarray
    geodesics: np.ndarray
    classical: oracle.EmbeddingResult
    quantum: oracle.EmbeddingResult | None
    metrics: dict
    diagnostics: dict
    timings: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(stage.get("ok", False) for stage in self.diagnostics["stages"].values())


def stage_rng(seed: int, stage: str) -> np.random.Generator:
    """Independent stream per named stage, all derived from one seed."""
    return np.random.default_rng([int(seed), zlib.crc32(stage.encode())])


def load_points(cfg: RunConfig) -> np.ndarray:
    ds = cfg.dataset
    if "path" in ds:
        pts = io.read_points(ds["path"])
        if pts.shape[0] > MAX_POINTS:
            raise ValueError(f"at most {MAX_POINTS} points")
        return pts
    return generate_dataset(ds["name"], int(ds["n"]), float(ds.get("noise", 0.0)), int(ds.get("seed", cfg.seed)))


def build_adjacency(points, cfg: RunConfig) -> qfloyd.AdjacencyInput:
    weights = qfloyd.knn_graph(points, cfg.knn_k)
    fmt = None
    if cfg.fp_format != "auto":
        fmt = FpFormat.from_dict(cfg.fp_format)
    return qfloyd.AdjacencyInput.from_matrix(weights, fmt=fmt, fraction_bits=cfg.fraction_bits)


def _fill_infinite(D):
    if np.any(np.isinf(D)):
        finite = D[np.isfinite(D)]
        D = np.where(np.isinf(D), 2.0 * finite.max(initial=1.0), D)
    return D


def run_pipeline(cfg: RunConfig) -> RunReport:
    timings: dict[str, float] = {}
    stages: dict[str, dict] = {}
    clock = time.perf_counter()

    def lap(name):
        nonlocal clock
        now = time.perf_counter()
        timings[name] = now - clock
        clock = now

    points = load_points(cfg)
    adj = build_adjacency(points, cfg)
    d = cfg.target_dim
    lap("adjacency")

    # classical oracle on the identical quantised adjacency
    D_classical = qfloyd.classical_floyd(adj)
    disconnected = bool(np.any(np.isinf(D_classical)))
    if disconnected and not cfg.allow_disconnected:
        raise Disconnected("neighbourhood graph is disconnected; raise knn_k or set allow_disconnected")
    D_fill = _fill_infinite(D_classical)
    K_classical = oracle.center_distances(D_fill, cfg.square_distances)
    lam, V = oracle.jacobi_eigh(K_classical)
    classical = oracle.embed(lam, V, d)
    lap("classical")

    quantum = None
    stages["qfloyd"] = {"ok": False}
    stages["gramprep"] = {"ok": False, "skipped": True}
    stages["qsve"] = {"ok": False, "skipped": True}
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", DisconnectedWarning)
            geo = qfloyd.run_quantum_floyd(adj, max_bits=cfg.max_label_bits)
        match = bool(np.array_equal(geo.codes(), encode_array(D_classical, adj.fmt)))
        stages["qfloyd"] = {
            "ok": match,
            "format": adj.fmt.to_dict(),
            "floyd_match": match,
            "disconnected": disconnected,
            "normalizer": geo.normalizer,
            "success_probability": geo.success_probability,
            "terms": len(geo.register_form),
        }
        lap("qfloyd")

        stages["gramprep"] = _gram_stage(geo, cfg, K_classical)
        gram = stages["gramprep"].pop("_state")
        lap("gramprep")

        stages["qsve"], quantum = _qsve_stage(gram, cfg, d)
        lap("qsve")
    except DirtyAncilla as exc:
        stage = exc.stage or "unknown"
        stages[stage] = {"ok": False, "error": f"DirtyAncilla: {exc}"}
        log.error("stage %s failed its ancilla check: %s", stage, exc)

    metrics = _metrics(D_fill, classical, quantum, lam, cfg)
    diagnostics = {"seed": cfg.seed, "stages": stages}
    if cfg.record_timings:
        diagnostics["timings"] = timings
    return RunReport(cfg, points, D_fill, classical, quantum, metrics, diagnostics, timings)


def _gram_stage(geo, cfg: RunConfig, K_classical) -> dict:
    values = gramprep.geodesic_values(geo, cfg.square_distances)
    value_range = float(values.max(initial=0.0))
    if cfg.mean_source == "amplitude":
        value_range = geo.normalizer * float(np.sqrt(values).max(initial=0.0)) / geo.n
    eps = cfg.mean_epsilon * value_range if value_range > 0 else 1.0
    means = gramprep.estimate_means(
        geo, eps, cfg.mean_delta, stage_rng(cfg.seed, "means"),
        square=cfg.square_distances, samples=cfg.mean_samples,
        max_samples=cfg.mean_sample_cap, exact=cfg.exact_means, source=cfg.mean_source,
    )
    reg, fmt = gramprep.build_gram_register(geo, means, cfg.square_distances, cfg.max_label_bits)
    gram = gramprep.build_gram_amplitude(reg, fmt, geo.n)
    K_q = gram.matrix()
    err = float(np.abs(K_q - K_classical).max())
    bound = 4 * 2.0 ** -geo.fmt.f
    symmetric = bool(np.array_equal(K_q, K_q.T))
    ok = symmetric and (err <= bound if cfg.exact_means else True)
    return {
        "ok": ok,
        "format": fmt.to_dict(),
        "exact_means": cfg.exact_means,
        "mean_samples": means.samples,
        "mean_epsilon": means.epsilon,
        "mean_estimates": means.records(),
        "max_gram_error": err,
        "gram_error_bound": bound,
        "symmetric": symmetric,
        "normalizer": gram.normalizer,
        "success_probability": gram.success_probability,
        "_state": gram,
    }


def _qsve_stage(gram, cfg: RunConfig, d: int):
    rng = stage_rng(cfg.seed, "qsve")
    w, es, readout, emb = qsve.run_qsve(
        gram, cfg.precision_bits, cfg.spectrum_shots, cfg.eta, cfg.tomography_copies, d,
        rng=rng, sign_oracle=cfg.sign_oracle, seed=cfg.seed,
    )
    n2 = w.n ** 2
    iso_m = float(np.abs(w.col_map.T @ w.col_map - np.eye(w.n)).max())
    iso_n = float(np.abs(w.row_map.T @ w.row_map - np.eye(w.n)).max())
    unit = float(np.abs(w.unitary @ w.unitary.T - np.eye(n2)).max())
    ok = max(iso_m, iso_n, unit) <= 1e-10
    diag = {
        "ok": ok,
        "col_map_isometry_error": iso_m,
        "row_map_isometry_error": iso_n,
        "unitarity_error": unit,
        "frobenius_norm": w.frob,
        "precision_bits": cfg.precision_bits,
        "readout": json.loads(readout.to_json()),
    }
    return diag, emb


def _metrics(D, classical, quantum, lam, cfg: RunConfig) -> dict:
    zc_norm = float(np.linalg.norm(classical.Z))
    r_classical = oracle.distance_correlation(D, classical.Z)
    m = {
        "n": int(D.shape[0]),
        "d": cfg.target_dim,
        "eta_classical": classical.eta,
        "classical_eigenvalues": [float(x) for x in classical.eigenvalues],
        "pearson_classical": r_classical,
        "residual_variance_classical": 1 - r_classical ** 2,
        "norm_Z_classical": zc_norm,
    }
    if quantum is None:
        m.update({"procrustes_error": None, "procrustes_relative": None})
        return m
    err = oracle.procrustes_error(quantum.Z, classical.Z)
    r_quantum = oracle.distance_correlation(D, quantum.Z)
    m.update({
        "procrustes_error": err,
        "procrustes_relative": err / zc_norm if zc_norm > 0 else 0.0,
        "pearson_quantum": r_quantum,
        "residual_variance_quantum": 1 - r_quantum ** 2,
        "eta_quantum": quantum.eta,
        "quantum_eigenvalues": [float(x) for x in quantum.eigenvalues],
        "max_eigenvalue_error": float(np.abs(quantum.eigenvalues - classical.eigenvalues).max()),
    })
    return m


ARTIFACTS = ("embedding_classical.csv", "embedding_quantum.csv", "metrics.json",
             "diagnostics.json", "config.json")


def _dump_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True, allow_nan=True)
        fh.write("\n")


def emit_artifacts(report: RunReport, out_dir) -> list[Path]:
    out = io.ensure_dir(out_dir)
    io.write_matrix(out / "embedding_classical.csv", report.classical.Z)
    if report.quantum is not None:
        io.write_matrix(out / "embedding_quantum.csv", report.quantum.Z)
    else:
        (out / "embedding_quantum.csv").write_text("")
    _dump_json(out / "metrics.json", report.metrics)
    _dump_json(out / "diagnostics.json", {"ok": report.ok, **report.diagnostics})
    _dump_json(out / "config.json", report.config.to_dict())
    return [out / name for name in ARTIFACTS]
