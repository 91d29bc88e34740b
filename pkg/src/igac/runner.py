"""Experiment orchestration and deterministic artifact output."""

from __future__ import annotations

import hashlib
import json
import math
import platform
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

import numpy as np
import scipy

from . import __version__
from ._ode import StepControl
from .config import ExperimentConfig
from .curvature import curvature_tensors, sectional_by_plane, weyl_anisotropy
from .geodesic import GeodesicPath, GeodesicState, integrate_geodesic, iho_trajectories, norm_drift, unit_speed
from .ige import FrequencySpectrum, GrowthClassification, IGESeries, classify_growth, ensemble_ige, ige_series
from .jacobi import ExponentFit, JacobiField, default_deviation, divergence_exponent, integrate_jlc
from .manifolds import ManifoldSpec, build_manifold
from .report import ChaosReport, CurvatureSummary, chaos_report


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    manifold: ManifoldSpec
    curvature: Optional[dict] = None
    curvature_summary: Optional[CurvatureSummary] = None
    path: Optional[GeodesicPath] = None
    jacobi: Optional[JacobiField] = None
    fit: Optional[ExponentFit] = None
    series: Optional[IGESeries] = None
    classification: Optional[GrowthClassification] = None
    report: Optional[ChaosReport] = None


def curvature_payload(m: ManifoldSpec, theta) -> dict:
    """Scalar, Ricci, plane sectional curvatures and Weyl-type anisotropy at ``theta``."""
    b = curvature_tensors(m, theta)
    planes = sectional_by_plane(m, theta)
    return {
        "point": [float(v) for v in b.point],
        "scalar": float(b.scalar),
        "ricci": b.ricci.tolist(),
        "sectional_by_plane": {f"{i + 1},{j + 1}": float(k) for (i, j), k in sorted(planes.items())},
        # a 1-d manifold has no 2-planes, hence no anisotropy
        "weyl_max_abs": float(np.max(np.abs(weyl_anisotropy(m, theta)))) if m.dimension > 1 else 0.0,
    }


def _sample_points(path: GeodesicPath, count: int):
    idx = np.unique(np.linspace(0, len(path) - 1, count).round().astype(int))
    return path.theta[idx]


def _iho_deviation(omega, tau_max, control, t_eval) -> JacobiField:
    # the oscillator flow is linear, so its tangent flow obeys the same equation
    l = len(omega)
    dev = iho_trajectories(omega, np.zeros(l), np.full(l, 1.0 / math.sqrt(l)), tau_max, control, t_eval)
    intensity = np.linalg.norm(dev.theta, axis=1)
    return JacobiField(dev.tau, dev.theta, dev.thetadot, intensity, dev.theta, dev.thetadot, "iho", dev.status)


def provenance(cfg: ExperimentConfig) -> dict:
    return {
        "config_hash": cfg.config_hash,
        "seed": cfg.output.seed,
        "versions": {
            "igac": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> ExperimentResult:
    """Run the enabled analyses in order: curvature, geodesic, Jacobi, entropy.

    Raises:
        ValueError / DomainError / DegenerateRegionError: invalid experiment
            (bad initial point, degenerate sweep, bad window).
        ConvergenceError / MetricError: numerical failure.
    """
    h = cfg.config_hash
    ens = cfg.ensemble
    geo = cfg.geodesic
    if ens is not None:
        omega = np.full(ens.l, ens.omega_mean)
        m = build_manifold("iho", {"omega": omega.tolist()})
        theta0 = np.full(ens.l, ens.theta0)
        control = StepControl(rtol=geo.rtol, atol=geo.atol) if geo else StepControl(rtol=1e-10, atol=1e-12)
        tau_max = cfg.ige.grid[-1] if cfg.ige.grid else (geo.tau_max if geo else 10.0)
        samples = geo.samples if geo else 801
    else:
        m = build_manifold(cfg.manifold, cfg.params)
        theta0 = np.asarray(geo.theta, dtype=float)
        control = StepControl(rtol=geo.rtol, atol=geo.atol)
        tau_max, samples = geo.tau_max, geo.samples
    out = ExperimentResult(cfg, m)
    theta0 = m.check_point(theta0)

    if cfg.curvature.enabled:
        out.curvature = curvature_payload(m, theta0)

    t_eval = np.union1d(np.linspace(0.0, tau_max, samples), np.asarray(cfg.ige.grid, dtype=float))
    if ens is not None:
        out.path = iho_trajectories(omega, theta0, np.full(ens.l, ens.thetadot0), tau_max, control, t_eval)
    else:
        v0 = unit_speed(m, theta0, geo.thetadot) if geo.normalize else np.asarray(geo.thetadot, dtype=float)
        out.path = integrate_geodesic(m, GeodesicState(0.0, theta0, v0), tau_max, control, t_eval)

    if cfg.curvature.enabled:
        values = [out.curvature["scalar"]]
        if cfg.curvature.points > 1:
            pts = _sample_points(out.path, cfg.curvature.points)[1:]
            values += [curvature_tensors(m, p).scalar for p in pts]
        out.curvature["sampled_scalar"] = [float(v) for v in values]
        out.curvature_summary = CurvatureSummary.from_values(values, h)

    if cfg.jacobi.enabled:
        if ens is not None:
            out.jacobi = _iho_deviation(omega, out.path.tau_end, control, out.path.tau)
        else:
            J0, DJ0 = default_deviation(m, theta0, out.path.thetadot[0])
            out.jacobi = integrate_jlc(m, out.path, J0, DJ0, control)
        out.fit = replace(divergence_exponent(out.jacobi, cfg.jacobi.window), config_hash=h)

    if cfg.ige.enabled:
        if ens is not None:
            spectrum = FrequencySpectrum(ens.l, ens.omega_mean, ens.omega_std, cfg.ensemble_seed)
            res = ensemble_ige(spectrum, ens.theta0, ens.thetadot0, cfg.ige.grid, ens.samples,
                               budget=cfg.ige.budget, control=control, window=cfg.ige.window,
                               threads=threads, tol=cfg.ige.tol)
            out.series, cls = res.series, res.classification
        else:
            grid = np.asarray(cfg.ige.grid, dtype=float)
            out.series = ige_series(m, out.path, grid, budget=cfg.ige.budget, tol=cfg.ige.tol,
                                    seed=cfg.output.seed, threads=threads)
            cls = classify_growth(out.series, cfg.ige.window)
        out.classification = replace(cls, config_hash=h)

    name = m.name if ens is None else f"iho ensemble (l={ens.l})"
    out.report = chaos_report(out.curvature_summary, out.fit, out.classification, name,
                              provenance(cfg), ensemble=ens is not None)
    return out


# -- serialisation ------------------------------------------------------------


def fmt(x) -> str:
    """17 significant digits; integers and non-finite values spelled plainly."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return format(x, ".17g")


def _json_str(s: str) -> str:
    return json.dumps(s, ensure_ascii=False)


def dumps_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with every float written to 17 significant digits (non-finite -> null)."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    if isinstance(obj, str):
        return _json_str(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {dumps_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in obj):
            return "[" + ", ".join(dumps_json(v) for v in obj) + "]"
        items = [pad + dumps_json(v, indent, _level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def csv_text(header, columns) -> str:
    cols = [np.asarray(c) for c in columns]
    lines = [",".join(header)]
    for row in zip(*cols):
        lines.append(",".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def geodesic_table(m: ManifoldSpec, path: GeodesicPath):
    n = path.dimension
    header = ["tau"] + [f"theta_{i + 1}" for i in range(n)] + [f"thetadot_{i + 1}" for i in range(n)] + ["norm_drift"]
    cols = [path.tau, *path.theta.T, *path.thetadot.T, norm_drift(m, path)]
    return header, cols


def jacobi_table(field: JacobiField):
    return ["tau", "intensity"], [field.tau, field.intensity]


def ige_table(series: IGESeries):
    return ["tau", "weight", "V", "S"], [series.tau, series.weight, series.V, series.S]


def fit_summary(fit: ExponentFit) -> dict:
    return {"exponent": fit.exponent, "intercept": fit.intercept, "r2": fit.r2,
            "window": list(fit.window), "n_points": fit.n_points}


def classification_summary(cls: GrowthClassification) -> dict:
    return {"class": cls.label, "rate": cls.rate, "r2_linear": cls.r2_linear, "r2_log": cls.r2_log,
            "slope_linear": cls.slope_linear, "slope_log": cls.slope_log, "window": list(cls.window)}


def table_json(header, columns) -> dict:
    return {h: np.asarray(c, dtype=float).tolist() for h, c in zip(header, columns)}


def _write(path: Path, text: str):
    try:
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def emit_outputs(result: ExperimentResult, directory=None, formats=None) -> list:
    """Write CSV/JSON artifacts, ``report.json`` and ``manifest.json``; return the paths.

    ``csv`` covers the tabular series and ``json`` the per-analysis
    summaries; the report and manifest are always written.
    """
    cfg = result.config
    directory = Path(directory if directory is not None else cfg.output.directory)
    formats = tuple(formats if formats is not None else cfg.output.formats)
    try:
        directory.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {directory}: {exc.strerror or exc}") from exc
    files = {}
    if "csv" in formats:
        if result.path is not None:
            files["geodesic.csv"] = csv_text(*geodesic_table(result.manifold, result.path))
        if result.jacobi is not None:
            files["jacobi.csv"] = csv_text(*jacobi_table(result.jacobi))
        if result.series is not None:
            files["ige_series.csv"] = csv_text(*ige_table(result.series))
    if "json" in formats:
        if result.curvature is not None:
            files["curvature.json"] = dumps_json(result.curvature) + "\n"
        if result.fit is not None:
            files["jacobi_fit.json"] = dumps_json(fit_summary(result.fit)) + "\n"
        if result.classification is not None:
            files["ige_classification.json"] = dumps_json(classification_summary(result.classification)) + "\n"
    if result.report is not None:
        files["report.json"] = dumps_json(result.report.to_dict()) + "\n"
    manifest = {
        "tool": "igac",
        "version": __version__,
        "config_hash": cfg.config_hash,
        "seed": cfg.output.seed,
        "files": {name: hashlib.sha256(text.encode()).hexdigest() for name, text in sorted(files.items())},
        "config": cfg.source,
    }
    files["manifest.json"] = dumps_json(manifest) + "\n"
    written = []
    for name, text in files.items():
        _write(directory / name, text)
        written.append(directory / name)
    return written


__all__ = [
    "ExperimentResult",
    "curvature_payload",
    "dumps_json",
    "emit_outputs",
    "run_experiment",
]
