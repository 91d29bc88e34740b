"""Experiment configuration: TOML parsing and validation."""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from .exceptions import ConfigError
from .manifolds import BUILTIN_MANIFOLDS, build_manifold

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

MAX_SEED = (1 << 64) - 1
FORMATS = ("csv", "json")
SECTIONS = ("manifold", "geodesic", "curvature", "jacobi", "ige", "ensemble", "output")


@dataclass(frozen=True)
class GeodesicSection:
    theta: tuple
    thetadot: tuple
    tau_max: float
    normalize: bool = True
    rtol: float = 1e-10
    atol: float = 1e-12
    samples: int = 801


@dataclass(frozen=True)
class CurvatureSection:
    enabled: bool = True
    points: int = 5


@dataclass(frozen=True)
class JacobiSection:
    enabled: bool = True
    window: Optional[tuple] = None


@dataclass(frozen=True)
class IGESection:
    enabled: bool = True
    grid: tuple = ()
    window: Optional[tuple] = None
    budget: int = 1 << 18
    tol: float = 1e-7


@dataclass(frozen=True)
class EnsembleSection:
    l: int
    omega_mean: float
    omega_std: float = 0.0
    samples: int = 1
    seed: Optional[int] = None
    theta0: float = 1.0
    thetadot0: float = 0.0


@dataclass(frozen=True)
class OutputSection:
    directory: str = "igac_out"
    formats: tuple = FORMATS
    seed: int = 0


@dataclass(frozen=True)
class ExperimentConfig:
    manifold: str
    params: dict
    geodesic: Optional[GeodesicSection]
    curvature: CurvatureSection
    jacobi: JacobiSection
    ige: IGESection
    ensemble: Optional[EnsembleSection]
    output: OutputSection
    source: str = field(default="", compare=False)

    def with_overrides(self, seed: Optional[int] = None, directory: Optional[str] = None,
                       formats: Optional[tuple] = None) -> "ExperimentConfig":
        out = self.output
        if seed is not None:
            _check_seed(seed, "--seed")
            out = dataclasses.replace(out, seed=int(seed))
        if directory is not None:
            out = dataclasses.replace(out, directory=str(directory))
        if formats is not None:
            out = dataclasses.replace(out, formats=tuple(formats))
        return dataclasses.replace(self, output=out)

    def canonical(self) -> dict:
        """Everything that affects numbers; the output directory and formats do not."""
        d = dataclasses.asdict(self)
        d.pop("source")
        d["output"] = {"seed": self.output.seed}
        return d

    @property
    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()

    @property
    def ensemble_seed(self) -> int:
        if self.ensemble is not None and self.ensemble.seed is not None:
            return self.ensemble.seed
        return self.output.seed


def _check_seed(seed, where):
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= MAX_SEED:
        raise ConfigError([(where, f"seed must be an unsigned 64-bit integer, got {seed!r}")])


class _Checker:
    """Collects every validation problem before raising."""

    def __init__(self, doc):
        self.doc = doc
        self.problems = []

    def section(self, name, required=False):
        sec = self.doc.get(name)
        if sec is None:
            if required:
                self.problems.append((name, "missing section"))
            return None
        if not isinstance(sec, dict):
            self.problems.append((name, "must be a table"))
            return None
        return sec

    def fail(self, path, msg):
        self.problems.append((path, msg))

    def get(self, sec, name, key, kind, default=dataclasses.MISSING, check=None, msg=""):
        path = f"{name}.{key}"
        if sec is None or key not in sec:
            if default is dataclasses.MISSING:
                self.fail(path, "missing key")
                return None
            return default
        val = sec[key]
        try:
            val = kind(val)
        except (TypeError, ValueError) as exc:
            self.fail(path, str(exc))
            return None
        if check is not None and not check(val):
            self.fail(path, msg or f"invalid value {sec[key]!r}")
            return None
        return val

    def unknown(self, sec, name, allowed):
        if sec is None:
            return
        for key in sec:
            if key not in allowed:
                self.fail(f"{name}.{key}", "unknown key")


def _real(x):
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise TypeError(f"expected a number, got {x!r}")
    if not math.isfinite(x):
        raise ValueError(f"expected a finite number, got {x!r}")
    return float(x)


def _integer(x):
    if isinstance(x, bool) or not isinstance(x, int):
        raise TypeError(f"expected an integer, got {x!r}")
    return int(x)


def _boolean(x):
    if not isinstance(x, bool):
        raise TypeError(f"expected true/false, got {x!r}")
    return x


def _vector(x):
    if not isinstance(x, (list, tuple)) or not x:
        raise TypeError(f"expected a non-empty array of numbers, got {x!r}")
    return tuple(_real(v) for v in x)


def _window(x):
    w = _vector(x)
    if len(w) != 2 or not w[0] < w[1]:
        raise ValueError(f"window must be [a, b] with a < b, got {x!r}")
    return w


def _grid(x):
    if isinstance(x, dict):
        extra = set(x) - {"start", "stop", "num"}
        if extra:
            raise ValueError(f"unknown grid keys {sorted(extra)}")
        start, stop, num = _real(x.get("start")), _real(x.get("stop")), _integer(x.get("num"))
        if num < 2 or not stop > start:
            raise ValueError("grid needs num >= 2 and stop > start")
        g = np.linspace(start, stop, num)
    else:
        g = np.asarray(_vector(x))
    if np.any(np.diff(g) <= 0):
        raise ValueError("grid must be strictly increasing")
    return tuple(float(v) for v in g)


def _formats(x):
    if isinstance(x, str):
        x = [x]
    if not isinstance(x, (list, tuple)) or not x or any(f not in FORMATS for f in x):
        raise ValueError(f"formats must be a non-empty subset of {list(FORMATS)}, got {x!r}")
    return tuple(f for f in FORMATS if f in x)


def _params(x):
    if not isinstance(x, dict):
        raise TypeError("params must be a table")
    return {k: (list(v) if isinstance(v, (list, tuple)) else v) for k, v in sorted(x.items())}


def parse_config(doc: dict, source: str = "") -> ExperimentConfig:
    """Validate a decoded TOML document.

    Raises:
        ConfigError: listing every problem as ``(section.key, message)``.
    """
    c = _Checker(doc)
    for key in doc:
        if key not in SECTIONS:
            c.fail(key, "unknown section")

    ens_sec = c.section("ensemble")
    ensemble = None
    if ens_sec is not None:
        c.unknown(ens_sec, "ensemble",
                  {"l", "omega_mean", "omega_std", "samples", "seed", "theta0", "thetadot0"})
        l = c.get(ens_sec, "ensemble", "l", _integer, check=lambda v: v >= 1, msg="l must be >= 1")
        mean = c.get(ens_sec, "ensemble", "omega_mean", _real, check=lambda v: v > 0,
                     msg="omega_mean must be positive")
        std = c.get(ens_sec, "ensemble", "omega_std", _real, 0.0, check=lambda v: v >= 0,
                    msg="omega_std must be >= 0")
        samples = c.get(ens_sec, "ensemble", "samples", _integer, 1, check=lambda v: v >= 1,
                        msg="samples must be >= 1")
        seed = c.get(ens_sec, "ensemble", "seed", _integer, None, check=lambda v: 0 <= v <= MAX_SEED,
                     msg="seed must be an unsigned 64-bit integer")
        th0 = c.get(ens_sec, "ensemble", "theta0", _real, 1.0)
        thd0 = c.get(ens_sec, "ensemble", "thetadot0", _real, 0.0)
        ensemble = EnsembleSection(l, mean, std, samples, seed, th0, thd0)

    man = c.section("manifold", required=ensemble is None)
    c.unknown(man, "manifold", {"name", "params"})
    if man is None and ensemble is not None:
        name, params = "iho", {}
    else:
        name = c.get(man, "manifold", "name", str, check=lambda v: v in BUILTIN_MANIFOLDS,
                     msg=f"name must be one of {list(BUILTIN_MANIFOLDS)}")
        params = c.get(man, "manifold", "params", _params, {})
    if ensemble is not None and name not in (None, "iho"):
        c.fail("manifold.name", "an [ensemble] section requires the iho manifold")
    dim = None
    if name is not None and params is not None and ensemble is None:
        try:
            dim = build_manifold(name, params).dimension
        except ValueError as exc:
            c.fail("manifold.params", str(exc))

    def toggle(sec_name, default=True):
        sec = c.section(sec_name)
        return sec, c.get(sec, sec_name, "enabled", _boolean, default)

    cur_sec, cur_on = toggle("curvature")
    c.unknown(cur_sec, "curvature", {"enabled", "points"})
    curvature = CurvatureSection(bool(cur_on), c.get(cur_sec, "curvature", "points", _integer, 5,
                                                     check=lambda v: v >= 1, msg="points must be >= 1"))
    jac_sec, jac_on = toggle("jacobi")
    c.unknown(jac_sec, "jacobi", {"enabled", "window"})
    jacobi = JacobiSection(bool(jac_on), c.get(jac_sec, "jacobi", "window", _window, None))

    ige_sec, ige_on = toggle("ige")
    c.unknown(ige_sec, "ige", {"enabled", "grid", "window", "budget", "tol"})
    ige = IGESection(
        bool(ige_on),
        c.get(ige_sec, "ige", "grid", _grid, () if not ige_on else dataclasses.MISSING) or (),
        c.get(ige_sec, "ige", "window", _window, None),
        c.get(ige_sec, "ige", "budget", _integer, 1 << 18, check=lambda v: v >= 64, msg="budget must be >= 64"),
        c.get(ige_sec, "ige", "tol", _real, 1e-7, check=lambda v: 0 < v < 1, msg="tol must lie in (0, 1)"),
    )
    if ige.enabled and ige.grid and ige.grid[0] <= 0:
        c.fail("ige.grid", "grid must start after tau = 0")

    geo_sec = c.section("geodesic", required=ensemble is None)
    geodesic = None
    if geo_sec is not None:
        c.unknown(geo_sec, "geodesic", {"theta", "thetadot", "tau_max", "normalize", "rtol", "atol", "samples"})
        theta = c.get(geo_sec, "geodesic", "theta", _vector)
        thetadot = c.get(geo_sec, "geodesic", "thetadot", _vector)
        for key, vec in (("theta", theta), ("thetadot", thetadot)):
            if vec is not None and dim is not None and len(vec) != dim:
                c.fail(f"geodesic.{key}", f"expected {dim} components for manifold {name!r}, got {len(vec)}")
        if thetadot is not None and all(v == 0 for v in thetadot):
            c.fail("geodesic.thetadot", "initial velocity must be nonzero")
        tau_max = c.get(geo_sec, "geodesic", "tau_max", _real, check=lambda v: v > 0, msg="tau_max must be positive")
        geodesic = GeodesicSection(
            theta, thetadot, tau_max,
            c.get(geo_sec, "geodesic", "normalize", _boolean, True),
            c.get(geo_sec, "geodesic", "rtol", _real, 1e-10, check=lambda v: 0 < v < 1, msg="rtol must lie in (0, 1)"),
            c.get(geo_sec, "geodesic", "atol", _real, 1e-12, check=lambda v: v > 0, msg="atol must be positive"),
            c.get(geo_sec, "geodesic", "samples", _integer, 801, check=lambda v: v >= 2, msg="samples must be >= 2"),
        )
        if tau_max is not None and ige.enabled and ige.grid and ensemble is None and ige.grid[-1] > tau_max:
            c.fail("ige.grid", f"grid ends at {ige.grid[-1]} beyond geodesic.tau_max = {tau_max}")

    out_sec = c.section("output")
    c.unknown(out_sec, "output", {"directory", "formats", "seed"})
    output = OutputSection(
        c.get(out_sec, "output", "directory", str, "igac_out"),
        c.get(out_sec, "output", "formats", _formats, FORMATS),
        c.get(out_sec, "output", "seed", _integer, 0, check=lambda v: 0 <= v <= MAX_SEED,
              msg="seed must be an unsigned 64-bit integer"),
    )
    if c.problems:
        raise ConfigError(c.problems)
    return ExperimentConfig(name, params, geodesic, curvature, jacobi, ige, ensemble, output, source)


def load_config(path) -> ExperimentConfig:
    """Read and validate a TOML experiment file.

    Raises:
        ConfigError: unreadable, unparseable or invalid file.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([(str(path), f"cannot read: {exc.strerror or exc}")]) from exc
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError([(str(path), f"invalid TOML: {exc}")]) from exc
    return parse_config(doc, source=text)


def bundled_config(name: str) -> Path:
    """Path of a config shipped with the package (``gaussian_l1``, ``integrable``, ...)."""
    base = Path(__file__).parent / "configs"
    path = base / (name if name.endswith(".toml") else name + ".toml")
    if not path.is_file():
        available = sorted(p.stem for p in base.glob("*.toml"))
        raise ConfigError([(name, f"no bundled config; available: {available}")])
    return path


__all__ = [
    "ExperimentConfig",
    "bundled_config",
    "load_config",
    "parse_config",
]
