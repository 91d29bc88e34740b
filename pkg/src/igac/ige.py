"""Information-geometrodynamical entropy along geodesics.

For a geodesic started at ``tau_0`` the explored region ``M(tau')`` is the
coordinate-aligned bounding box swept between ``tau_0`` and ``tau'``.  Then

    W(tau')  = integral over M(tau') of sqrt|det g| dtheta     (statistical weight)
    V(tau)   = 1/(tau - tau_0) * integral_{tau_0}^{tau} W(tau') dtau'
    S(tau)   = log V(tau)

and the growth of ``S`` is classified as linear or logarithmic in tau.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._ode import StepControl
from ._rng import ordered_map, substream
from .exceptions import ConvergenceError, DegenerateRegionError
from .geodesic import GeodesicPath, iho_trajectories
from .jacobi import _linear_fit
from .manifolds import ManifoldSpec, build_manifold, volume_density

#: Dimensions above this use Monte Carlo instead of tensor-product quadrature.
MAX_QUADRATURE_DIM = 3
#: Classifier thresholds: winning r^2 and its margin over the losing model.
R2_THRESHOLD = 0.98
R2_MARGIN = 0.01
#: Gauss-Legendre nodes per panel, per axis (inner) and per time panel (outer).
INNER_NODES = 8
OUTER_NODES = 5
#: Samples per Monte-Carlo chunk.
MC_CHUNK = 1 << 14


class GrowthClass(str, enum.Enum):
    LINEAR = "LINEAR"
    LOGARITHMIC = "LOGARITHMIC"
    UNDETERMINED = "UNDETERMINED"


@dataclass(frozen=True)
class ExploredRegion:
    lower: np.ndarray
    upper: np.ndarray

    def contains(self, other: "ExploredRegion") -> bool:
        return bool(np.all(self.lower <= other.lower) and np.all(self.upper >= other.upper))

    def check_nondegenerate(self, names: Sequence[str] = ()):
        width = self.upper - self.lower
        scale = np.maximum(1.0, np.maximum(np.abs(self.lower), np.abs(self.upper)))
        flat = width <= 1e-12 * scale
        if np.any(flat):
            k = int(np.flatnonzero(flat)[0])
            label = names[k] if names else f"theta[{k}]"
            raise DegenerateRegionError(
                f"explored region has zero extent along {label} "
                f"(sweep [{self.lower[k]!r}, {self.upper[k]!r}]); use a generic initial velocity",
                coordinate=label,
            )


class Sweep:
    """Running coordinate extrema of a path, for fast region queries."""

    def __init__(self, path: GeodesicPath, resolution: int = 4000):
        self.path = path
        fine = np.linspace(path.tau_start, path.tau_end, resolution)
        tau = np.union1d(np.asarray(path.tau, dtype=float), fine)
        theta, _ = path.state_at(tau)
        self.tau = tau
        self.cummin = np.minimum.accumulate(theta, axis=0)
        self.cummax = np.maximum.accumulate(theta, axis=0)

    def region(self, tau_prime: float) -> ExploredRegion:
        if tau_prime < self.tau[0] - 1e-12 or tau_prime > self.tau[-1] + 1e-12:
            raise ValueError(f"tau'={tau_prime} outside path span [{self.tau[0]}, {self.tau[-1]}]")
        idx = max(0, int(np.searchsorted(self.tau, tau_prime, side="right")) - 1)
        here, _ = self.path.state_at(tau_prime)
        return ExploredRegion(np.minimum(self.cummin[idx], here), np.maximum(self.cummax[idx], here))


def explored_region(path: GeodesicPath, tau_prime: float) -> ExploredRegion:
    return Sweep(path).region(tau_prime)


# -- statistical weight -------------------------------------------------------


@dataclass(frozen=True)
class WeightEstimate:
    value: float
    error: float
    method: str


def _axis_maps(m: ManifoldSpec, region: ExploredRegion):
    """Per-axis ``(u_lo, u_hi, kind, a)`` for the substitution applied before quadrature.

    Axes with a finite lower domain bound ``a`` use ``theta = a + exp(u)``, so
    scale-type coordinates sweeping many decades stay within a few panels;
    location-type axes are left as they are.
    """
    maps = []
    for k in range(m.dimension):
        a = m.domain.lower[k]
        lo, hi = region.lower[k], region.upper[k]
        if math.isfinite(a) and lo > a:
            maps.append((math.log(lo - a), math.log(hi - a), "log", a))
        else:
            maps.append((lo, hi, "identity", 0.0))
    return maps


def _to_box(maps, u):
    """Map points in mapped coordinates ``u`` to theta; returns ``(theta, jacobian)``."""
    theta = np.empty_like(u)
    jac = np.ones(u.shape[:-1])
    for k, (_, _, kind, a) in enumerate(maps):
        if kind == "log":
            e = np.exp(u[..., k])
            theta[..., k] = a + e
            jac = jac * e
        else:
            theta[..., k] = u[..., k]
    return theta, jac


_GL_CACHE: dict = {}


def _gl(q):
    if q not in _GL_CACHE:
        _GL_CACHE[q] = np.polynomial.legendre.leggauss(q)
    return _GL_CACHE[q]


def _tensor_quadrature(m, maps, panels):
    x, w = _gl(INNER_NODES)
    axes_nodes, axes_weights = [], []
    for lo, hi, _, _ in maps:
        edges = np.linspace(lo, hi, panels + 1)
        half = 0.5 * np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        axes_nodes.append((mid[:, None] + half[:, None] * x).ravel())
        axes_weights.append((half[:, None] * w).ravel())
    grids = np.meshgrid(*axes_nodes, indexing="ij")
    u = np.stack(grids, axis=-1)
    theta, jac = _to_box(maps, u)
    weight = axes_weights[0]
    for wk in axes_weights[1:]:
        weight = np.multiply.outer(weight, wk)
    return float(np.sum(volume_density(m, theta) * jac * weight))


def _quadrature_weight(m, region, budget, tol, start=1):
    """Panel doubling from ``start`` until successive levels agree to ``tol``; returns ``(estimate, level)``."""
    maps = _axis_maps(m, region)
    panels = max(1, start // 2)
    prev = _tensor_quadrature(m, maps, panels)
    while True:
        panels *= 2
        if (panels * INNER_NODES) ** m.dimension > budget:
            raise ConvergenceError(
                f"quadrature budget {budget} exhausted before reaching tolerance {tol:g}",
                achieved=None,
            )
        cur = _tensor_quadrature(m, maps, panels)
        err = abs(cur - prev)
        if err <= tol * abs(cur):
            return WeightEstimate(cur, err, "quadrature"), panels
        prev = cur


class _MCPoints:
    """Common unit-cube points reused across every tau' of a series."""

    def __init__(self, dim, budget, seed, threads=None):
        n_chunks = max(1, math.ceil(budget / MC_CHUNK))
        sizes = [min(MC_CHUNK, budget - c * MC_CHUNK) for c in range(n_chunks)]
        self.chunks = [substream(seed, c).random((size, dim)) for c, size in enumerate(sizes)]
        self.threads = threads
        self.n = budget

    def estimate(self, m, region) -> WeightEstimate:
        maps = _axis_maps(m, region)
        lo = np.array([mp[0] for mp in maps])
        width = np.array([mp[1] - mp[0] for mp in maps])
        vol = float(np.prod(width))

        def chunk_sums(pts):
            theta, jac = _to_box(maps, lo + pts * width)
            f = volume_density(m, theta) * jac
            return f.sum(), (f * f).sum()

        parts = ordered_map(chunk_sums, self.chunks, self.threads)
        s1 = sum(p[0] for p in parts)
        s2 = sum(p[1] for p in parts)
        mean = s1 / self.n
        var = max(s2 / self.n - mean * mean, 0.0)
        return WeightEstimate(vol * mean, vol * math.sqrt(var / self.n), "monte-carlo")


class WeightEvaluator:
    """Statistical weight of the region swept by one path, for any tau'."""

    def __init__(self, m: ManifoldSpec, path: GeodesicPath, budget: int = 1 << 18, tol: float = 1e-7,
                 seed: int = 0, threads: Optional[int] = None, method: Optional[str] = None):
        self.m = m
        self.sweep = Sweep(path)
        self.budget = budget
        self.tol = tol
        if method is None:
            method = "quadrature" if m.dimension <= MAX_QUADRATURE_DIM else "monte-carlo"
        if method not in ("quadrature", "monte-carlo"):
            raise ValueError(f"unknown weight method {method!r}")
        self.method = method
        self._mc = _MCPoints(m.dimension, budget, seed, threads) if method == "monte-carlo" else None
        self._level = 1

    def __call__(self, tau_prime: float) -> WeightEstimate:
        region = self.sweep.region(tau_prime)
        region.check_nondegenerate(self.m.coordinate_names)
        if self._mc is not None:
            return self._mc.estimate(self.m, region)
        # regions only grow along a series, so the last converged level is a good start
        est, self._level = _quadrature_weight(self.m, region, self.budget, self.tol, self._level)
        return est


def statistical_weight(m: ManifoldSpec, path: GeodesicPath, tau_prime: float, budget: int = 1 << 18,
                       tol: float = 1e-7, seed: int = 0, method: Optional[str] = None,
                       threads: Optional[int] = None) -> WeightEstimate:
    """Integral of ``sqrt|det g|`` over the box swept by ``path`` up to ``tau_prime``.

    Tensor-product Gauss-Legendre with panel doubling for dimension <= 3,
    plain Monte Carlo (with standard error) above.

    Raises:
        DegenerateRegionError: a coordinate did not move, so the box has no volume.
        ConvergenceError: the quadrature budget ran out before ``tol``.
    """
    return WeightEvaluator(m, path, budget, tol, seed, threads, method)(tau_prime)


# -- entropy series -----------------------------------------------------------


@dataclass(frozen=True)
class IGESeries:
    tau: np.ndarray
    weight: np.ndarray
    V: np.ndarray
    S: np.ndarray
    V_error: np.ndarray
    method: str


def _outer_nodes(t0, grid, panel):
    x, w = _gl(OUTER_NODES)
    edges = [t0]
    for t in grid:
        k = max(1, math.ceil((t - edges[-1]) / panel - 1e-12))
        edges.extend(np.linspace(edges[-1], t, k + 1)[1:])
    edges = np.array(edges)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[:-1] + edges[1:])
    nodes = (mid[:, None] + half[:, None] * x).ravel()
    weights = (half[:, None] * w).ravel()
    panel_end = np.repeat(edges[1:], OUTER_NODES)
    return nodes, weights, panel_end


def _time_integrals(evaluate, t0, grid, panel):
    nodes, weights, panel_end = _outer_nodes(t0, grid, panel)
    est = [evaluate(t) for t in nodes]
    vals = np.array([e.value for e in est])
    errs = np.array([e.error for e in est])
    cum = np.cumsum(vals * weights)
    cum_err = np.cumsum(errs * np.abs(weights))
    idx = np.searchsorted(panel_end, grid, side="right") - 1
    return cum[idx], cum_err[idx]


def ige_series(m: ManifoldSpec, path: GeodesicPath, grid: Sequence[float], budget: int = 1 << 18,
               tol: float = 1e-7, seed: int = 0, panel: float = 0.5, outer_tol: float = 1e-6,
               max_refinements: int = 4, method: Optional[str] = None,
               threads: Optional[int] = None) -> IGESeries:
    """Time-averaged weight ``V`` and entropy ``S = log V`` on ``grid``.

    The outer time integral uses composite Gauss-Legendre panels of width at
    most ``panel``, halved until every ``V(tau_j)`` changes by less than
    ``outer_tol`` (relative).  Monte-Carlo weights reuse one point set across
    all tau', so refinement is not disturbed by sampling noise.
    """
    grid = np.asarray(grid, dtype=float)
    t0 = path.tau_start
    if grid.ndim != 1 or len(grid) == 0:
        raise ValueError("grid must be a non-empty 1-d sequence")
    if np.any(np.diff(grid) <= 0):
        raise ValueError("grid must be strictly increasing")
    if grid[0] <= t0 or grid[-1] > path.tau_end + 1e-12:
        raise ValueError(f"grid [{grid[0]}, {grid[-1]}] must lie in ({t0}, {path.tau_end}]")
    evaluator = WeightEvaluator(m, path, budget, tol, seed, threads, method)
    integral, err = _time_integrals(evaluator, t0, grid, panel)
    for _ in range(max_refinements):
        panel /= 2
        finer, err = _time_integrals(evaluator, t0, grid, panel)
        change = np.max(np.abs(finer - integral) / np.abs(finer))
        integral = finer
        if change <= outer_tol:
            break
    else:
        raise ConvergenceError(f"time average did not settle to {outer_tol:g}", achieved=float(change))
    span = grid - t0
    V = integral / span
    weights = np.array([evaluator(t).value for t in grid])
    return IGESeries(grid, weights, V, np.log(V), err / span, evaluator.method)


# -- growth classification ----------------------------------------------------


@dataclass(frozen=True)
class GrowthClassification:
    growth: GrowthClass
    rate: float
    r2_linear: float
    r2_log: float
    slope_linear: float
    slope_log: float
    window: tuple
    config_hash: Optional[str] = None

    @property
    def label(self) -> str:
        return self.growth.value


def classify_growth(series, window: Optional[Sequence[float]] = None) -> GrowthClassification:
    """Fit ``S = a tau + b`` and ``S = c log tau + d``; pick the convincing winner.

    A class is assigned only if the winning fit has ``r^2 >= R2_THRESHOLD`` and
    beats the other by at least ``R2_MARGIN``; otherwise UNDETERMINED.  The
    window defaults to the full series.  ``series`` is an :class:`IGESeries`
    or a ``(tau, S)`` pair.
    """
    if isinstance(series, IGESeries):
        tau, S = series.tau, series.S
    else:
        tau, S = (np.asarray(a, dtype=float) for a in series)
    if window is None:
        window = (float(tau[0]), float(tau[-1]))
    lo, hi = float(window[0]), float(window[1])
    sel = (tau >= lo - 1e-12) & (tau <= hi + 1e-12)
    if sel.sum() < 10:
        raise ValueError(f"only {int(sel.sum())} points in window [{lo}, {hi}]; need >= 10")
    t, s = tau[sel], S[sel]
    if np.any(t <= 0):
        raise ValueError("logarithmic fit needs tau > 0 throughout the window")
    if not np.all(np.isfinite(s)):
        raise ValueError("entropy series contains non-finite values")
    a, _, r2_lin = _linear_fit(t, s)
    c, _, r2_log = _linear_fit(np.log(t), s)
    if r2_lin >= R2_THRESHOLD and r2_lin - r2_log >= R2_MARGIN:
        growth, rate = GrowthClass.LINEAR, a
    elif r2_log >= R2_THRESHOLD and r2_log - r2_lin >= R2_MARGIN:
        growth, rate = GrowthClass.LOGARITHMIC, c
    else:
        growth, rate = GrowthClass.UNDETERMINED, float("nan")
    return GrowthClassification(growth, rate, r2_lin, r2_log, a, c, (lo, hi))


# -- inverted-oscillator ensembles ----------------------------------------------


@dataclass(frozen=True)
class FrequencySpectrum:
    """Gaussian frequency spectrum truncated to positive values."""

    l: int
    mean: float
    std: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.l < 1:
            raise ValueError("l must be >= 1")
        if not self.mean > 0:
            raise ValueError("mean frequency must be positive")
        if self.std < 0:
            raise ValueError("frequency standard deviation must be >= 0")

    def draw(self, index: int) -> np.ndarray:
        """Frequencies of draw ``index``; non-positive values are redrawn."""
        if self.std == 0:
            return np.full(self.l, float(self.mean))
        rng = substream(self.seed, index)
        out = np.empty(self.l)
        for k in range(self.l):
            w = rng.normal(self.mean, self.std)
            while w <= 0:
                w = rng.normal(self.mean, self.std)
            out[k] = w
        return out


@dataclass(frozen=True)
class EnsembleResult:
    series: IGESeries
    classification: GrowthClassification
    frequencies: np.ndarray  # (samples, l)
    statuses: tuple


def ensemble_ige(spectrum: FrequencySpectrum, theta0, thetadot0, grid: Sequence[float], samples: int,
                 budget: int = 1 << 18, control: Optional[StepControl] = None,
                 window: Optional[Sequence[float]] = None, threads: Optional[int] = None,
                 tol: float = 1e-7) -> EnsembleResult:
    """Entropy averaged over ``samples`` oscillator-frequency draws, then classified.

    Each draw runs :func:`iho_trajectories` and evaluates the entropy on the
    ``iho`` manifold with those frequencies.  ``S`` is averaged across draws in
    draw order.  Draws that stop early (overflow guard) shorten the grid to
    the span every draw covers.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    grid = np.asarray(grid, dtype=float)
    l = spectrum.l
    theta0 = np.broadcast_to(np.asarray(theta0, dtype=float), (l,))
    thetadot0 = np.broadcast_to(np.asarray(thetadot0, dtype=float), (l,))
    control = control or StepControl(rtol=1e-10, atol=1e-12)
    t_eval = np.union1d(np.linspace(0.0, grid[-1], 401), grid)

    def run(index):
        omega = spectrum.draw(index)
        path = iho_trajectories(omega, theta0, thetadot0, grid[-1], control, t_eval)
        usable = grid[grid <= path.tau_end + 1e-12]
        m = build_manifold("iho", {"omega": omega.tolist()})
        series = ige_series(m, path, usable, budget=budget, tol=tol, threads=1)
        return omega, series, path.status

    indices = [0] if spectrum.std == 0 else list(range(samples))
    results = ordered_map(run, indices, threads)
    if spectrum.std == 0:
        results = results * samples
    n_common = min(len(r[1].tau) for r in results)
    if n_common == 0:
        raise ConvergenceError("no grid point survived the overflow guard", achieved=None)
    stack = lambda attr: np.array([getattr(r[1], attr)[:n_common] for r in results])
    if spectrum.std == 0:
        first = results[0][1]
        series = IGESeries(first.tau[:n_common], first.weight[:n_common], first.V[:n_common],
                           first.S[:n_common], first.V_error[:n_common], first.method)
    else:
        S = stack("S").mean(axis=0)
        series = IGESeries(grid[:n_common], stack("weight").mean(axis=0), np.exp(S), S,
                           stack("V_error").mean(axis=0), results[0][1].method)
    cls = classify_growth(series, window)
    return EnsembleResult(series, cls, np.array([r[0] for r in results]), tuple(r[2] for r in results))


__all__ = [
    "DegenerateRegionError",
    "EnsembleResult",
    "ExploredRegion",
    "FrequencySpectrum",
    "GrowthClass",
    "GrowthClassification",
    "IGESeries",
    "Sweep",
    "WeightEstimate",
    "WeightEvaluator",
    "classify_growth",
    "ensemble_ige",
    "explored_region",
    "ige_series",
    "statistical_weight",
]
