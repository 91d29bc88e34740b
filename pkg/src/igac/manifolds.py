"""Statistical manifolds: coordinate domains carrying a metric-tensor field.

Four built-in manifolds are provided:

* ``gaussian``   -- ``l`` independent Gaussians, coordinates ``(mu_1..mu_l, sigma_1..sigma_l)``,
  ``ds^2 = sum_k (dmu_k^2 + 2 dsigma_k^2) / sigma_k^2``.
* ``iho``        -- conformally flat metric ``(1 - Phi) delta`` with
  ``Phi = -1/2 sum_k omega_k^2 theta_k^2`` (inverted harmonic oscillators).
* ``integrable`` -- ``ds^2 = dmu_A^2/mu_A^2 + dmu_B^2/mu_B^2`` (Poisson level statistics).
* ``chaotic``    -- ``ds^2 = 4 dmu_A^2/mu_A^2 + (dmu_B^2 + 2 dsigma_B^2)/sigma_B^2``
  (Wigner-Dyson level statistics).

Metric evaluators are vectorised: they accept points of shape ``(..., n)`` and
return arrays of shape ``(..., n, n)``.  Derivative evaluators return
``dg[..., r, m, n] = d g_{mn} / d theta^r``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Optional, Sequence

import numpy as np

from .exceptions import DomainError, MetricError

#: Points closer than this to a finite domain bound are rejected.
BOUNDARY_EPS = 1e-12

BUILTIN_MANIFOLDS = ("gaussian", "iho", "integrable", "chaotic")

MetricFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class DomainBox:
    """Product of open intervals, one per coordinate."""

    lower: tuple
    upper: tuple

    def __post_init__(self):
        if len(self.lower) != len(self.upper):
            raise ValueError("lower and upper bounds differ in length")
        for k, (lo, hi) in enumerate(zip(self.lower, self.upper)):
            if not lo < hi:
                raise ValueError(f"coordinate {k}: lower bound {lo} not below upper bound {hi}")

    @property
    def dimension(self) -> int:
        return len(self.lower)

    @classmethod
    def from_kinds(cls, kinds: Sequence[str]) -> "DomainBox":
        """Build a box from coordinate kinds: ``"location"`` -> R, ``"scale"`` -> (0, inf)."""
        lower, upper = [], []
        for kind in kinds:
            if kind == "location":
                lower.append(-math.inf)
            elif kind == "scale":
                lower.append(0.0)
            else:
                raise ValueError(f"unknown coordinate kind {kind!r}")
            upper.append(math.inf)
        return cls(tuple(lower), tuple(upper))

    def distance_to_boundary(self, theta) -> np.ndarray:
        """Smallest distance from each point to a finite bound (``inf`` if unbounded)."""
        theta = np.asarray(theta, dtype=float)
        lo = np.asarray(self.lower, dtype=float)
        hi = np.asarray(self.upper, dtype=float)
        with np.errstate(invalid="ignore"):
            d = np.minimum(theta - lo, hi - theta)
        return np.min(d, axis=-1)

    def contains(self, theta, margin: float = BOUNDARY_EPS) -> bool:
        theta = np.asarray(theta, dtype=float)
        if theta.shape[-1] != self.dimension or not np.all(np.isfinite(theta)):
            return False
        return bool(np.all(self.distance_to_boundary(theta) > margin))

    def check(self, theta, margin: float = BOUNDARY_EPS, names: Optional[Sequence[str]] = None) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.ndim != 1 or theta.shape[0] != self.dimension:
            raise DomainError(
                f"expected a point of dimension {self.dimension}, got shape {theta.shape}"
            )
        for k, x in enumerate(theta):
            label = names[k] if names else f"theta[{k}]"
            if not math.isfinite(x):
                raise DomainError(f"{label}={x} is not finite")
            lo, hi = self.lower[k], self.upper[k]
            if not (x - lo > margin and hi - x > margin):
                raise DomainError(f"{label}={x!r} outside domain ({lo}, {hi})")
        return theta


@dataclass(frozen=True)
class ManifoldSpec:
    """A single-chart statistical manifold.

    Attributes:
        name: identifier (a built-in name or a user label).
        dimension: number of coordinates.
        metric: vectorised evaluator ``theta -> g``.
        domain: coordinate domain.
        params: named constants of the manifold (``l``, ``omega``, ...).
        metric_derivative: optional analytic ``theta -> dg``.
        coordinate_names: labels used in diagnostics and output headers.
        density: optional closed-form ``theta -> sqrt|det g|`` (vectorised).
    """

    name: str
    dimension: int
    metric: MetricFn
    domain: DomainBox
    params: Mapping[str, object] = field(default_factory=dict)
    metric_derivative: Optional[MetricFn] = None
    coordinate_names: tuple = ()
    density: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __post_init__(self):
        if self.dimension < 1:
            raise ValueError("dimension must be positive")
        if self.domain.dimension != self.dimension:
            raise ValueError(
                f"domain has {self.domain.dimension} coordinates, manifold has {self.dimension}"
            )
        if not self.coordinate_names:
            names = tuple(f"theta_{k + 1}" for k in range(self.dimension))
            object.__setattr__(self, "coordinate_names", names)

    def check_point(self, theta, margin: float = BOUNDARY_EPS) -> np.ndarray:
        return self.domain.check(theta, margin=margin, names=self.coordinate_names)


# -- built-in metric fields -------------------------------------------------


def _gaussian_metric(l):
    def metric(theta):
        theta = np.asarray(theta, dtype=float)
        sigma = theta[..., l:]
        inv = 1.0 / sigma**2
        diag = np.concatenate([inv, 2.0 * inv], axis=-1)
        return _diag(diag)

    def derivative(theta):
        theta = np.asarray(theta, dtype=float)
        n = 2 * l
        dg = np.zeros(theta.shape[:-1] + (n, n, n))
        sigma = theta[..., l:]
        c = -2.0 / sigma**3
        for k in range(l):
            s = l + k
            dg[..., s, k, k] = c[..., k]
            dg[..., s, s, s] = 2.0 * c[..., k]
        return dg

    def density(theta):
        sigma = np.asarray(theta, dtype=float)[..., l:]
        return np.prod(math.sqrt(2.0) / sigma**2, axis=-1)

    return metric, derivative, density


def _iho_metric(omega):
    w2 = np.asarray(omega, dtype=float) ** 2
    n = len(w2)

    def conformal(theta):
        return 1.0 + 0.5 * np.sum(w2 * np.asarray(theta, dtype=float) ** 2, axis=-1)

    def metric(theta):
        f = conformal(theta)
        return f[..., None, None] * np.eye(n)

    def derivative(theta):
        theta = np.asarray(theta, dtype=float)
        grad = w2 * theta  # d(1 - Phi)/d theta_r
        return grad[..., :, None, None] * np.eye(n)

    def density(theta):
        return conformal(theta) ** (n / 2.0)

    return metric, derivative, density


def _integrable_metric():
    def metric(theta):
        theta = np.asarray(theta, dtype=float)
        return _diag(1.0 / theta**2)

    def derivative(theta):
        theta = np.asarray(theta, dtype=float)
        dg = np.zeros(theta.shape[:-1] + (2, 2, 2))
        c = -2.0 / theta**3
        dg[..., 0, 0, 0] = c[..., 0]
        dg[..., 1, 1, 1] = c[..., 1]
        return dg

    def density(theta):
        theta = np.asarray(theta, dtype=float)
        return 1.0 / np.abs(theta[..., 0] * theta[..., 1])

    return metric, derivative, density


def _chaotic_metric():
    def metric(theta):
        theta = np.asarray(theta, dtype=float)
        mu_a, sigma = theta[..., 0], theta[..., 2]
        diag = np.stack([4.0 / mu_a**2, 1.0 / sigma**2, 2.0 / sigma**2], axis=-1)
        return _diag(diag)

    def derivative(theta):
        theta = np.asarray(theta, dtype=float)
        mu_a, sigma = theta[..., 0], theta[..., 2]
        dg = np.zeros(theta.shape[:-1] + (3, 3, 3))
        dg[..., 0, 0, 0] = -8.0 / mu_a**3
        dg[..., 2, 1, 1] = -2.0 / sigma**3
        dg[..., 2, 2, 2] = -4.0 / sigma**3
        return dg

    def density(theta):
        theta = np.asarray(theta, dtype=float)
        return 2.0 * math.sqrt(2.0) / np.abs(theta[..., 0] * theta[..., 2] ** 2)

    return metric, derivative, density


def _diag(d):
    n = d.shape[-1]
    out = np.zeros(d.shape + (n,))
    idx = np.arange(n)
    out[..., idx, idx] = d
    return out


def _parse_positive_int(params, key):
    if key not in params:
        raise ValueError(f"missing parameter {key!r}")
    value = params[key]
    try:
        as_float = float(value)
    except (TypeError, ValueError):
        raise ValueError(f"parameter {key!r} must be an integer, got {value!r}") from None
    if not as_float.is_integer() or as_float < 1:
        raise ValueError(f"parameter {key!r} must be an integer >= 1, got {value!r}")
    return int(as_float)


def _parse_omega(params, l):
    if "omega" not in params:
        raise ValueError("missing parameter 'omega'")
    omega = params["omega"]
    if isinstance(omega, str):
        omega = [float(x) for x in omega.replace(",", ";").split(";") if x.strip()]
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    if l is None:
        l = len(omega)
    if omega.ndim != 1 or len(omega) != l:
        raise ValueError(f"'omega' must list {l} frequencies, got {len(omega)}")
    if not np.all(np.isfinite(omega)) or np.any(omega <= 0):
        raise ValueError(f"'omega': all frequencies must be positive, got {omega.tolist()}")
    return omega


def build_manifold(name: str, params: Optional[Mapping[str, object]] = None) -> ManifoldSpec:
    """Construct one of the built-in manifolds.

    Args:
        name: one of ``gaussian``, ``iho``, ``integrable``, ``chaotic``.
        params: ``{"l": int}`` for gaussian, ``{"l": int, "omega": [...]}`` for
            iho (``l`` may be omitted and inferred from ``omega``), nothing otherwise.

    Raises:
        ValueError: unknown name or invalid parameters.
    """
    params = dict(params or {})
    if name == "gaussian":
        l = _parse_positive_int(params, "l")
        metric, deriv, dens = _gaussian_metric(l)
        names = tuple(f"mu_{k + 1}" for k in range(l)) + tuple(f"sigma_{k + 1}" for k in range(l))
        domain = DomainBox.from_kinds(["location"] * l + ["scale"] * l)
        return ManifoldSpec("gaussian", 2 * l, metric, domain, {"l": l}, deriv, names, dens)
    if name == "iho":
        l = _parse_positive_int(params, "l") if "l" in params else None
        omega = _parse_omega(params, l)
        l = len(omega)
        metric, deriv, dens = _iho_metric(omega)
        names = tuple(f"theta_{k + 1}" for k in range(l))
        domain = DomainBox.from_kinds(["location"] * l)
        return ManifoldSpec(
            "iho", l, metric, domain, {"l": l, "omega": tuple(omega.tolist())}, deriv, names,
            dens,
        )
    if name == "integrable":
        metric, deriv, dens = _integrable_metric()
        domain = DomainBox.from_kinds(["scale", "scale"])
        return ManifoldSpec(
            "integrable", 2, metric, domain, {}, deriv, ("mu_A", "mu_B"), dens
        )
    if name == "chaotic":
        metric, deriv, dens = _chaotic_metric()
        domain = DomainBox.from_kinds(["scale", "location", "scale"])
        return ManifoldSpec(
            "chaotic", 3, metric, domain, {}, deriv, ("mu_A", "mu_B", "sigma_B"), dens
        )
    raise ValueError(f"unknown manifold {name!r}; expected one of {', '.join(BUILTIN_MANIFOLDS)}")


def custom_manifold(
    name: str,
    metric: MetricFn,
    domain: DomainBox,
    metric_derivative: Optional[MetricFn] = None,
    coordinate_names: Sequence[str] = (),
    params: Optional[Mapping[str, object]] = None,
) -> ManifoldSpec:
    """Wrap a user-supplied metric field as a :class:`ManifoldSpec`.

    ``metric`` must accept arrays of shape ``(..., n)``.  Without
    ``metric_derivative`` the geometry routines fall back to central differences.
    """
    return ManifoldSpec(
        name, domain.dimension, metric, domain, dict(params or {}), metric_derivative,
        tuple(coordinate_names),
    )


def euclidean_manifold(n: int, scale: float = 1.0) -> ManifoldSpec:
    """Flat manifold with constant metric ``scale * I`` on R^n."""

    def metric(theta):
        theta = np.asarray(theta, dtype=float)
        return np.broadcast_to(scale * np.eye(n), theta.shape[:-1] + (n, n)).copy()

    def derivative(theta):
        theta = np.asarray(theta, dtype=float)
        return np.zeros(theta.shape[:-1] + (n, n, n))

    return custom_manifold("euclidean", metric, DomainBox.from_kinds(["location"] * n), derivative)


def parse_params(text: str) -> dict:
    """Parse ``"k=v,k=v"`` into a dict; ``;`` separates list items (``omega=1;2``)."""
    out = {}
    if not text:
        return out
    for item in text.split(","):
        item = item.strip()
        if not item:
            continue
        if "=" not in item:
            raise ValueError(f"malformed parameter {item!r}; expected key=value")
        key, value = (s.strip() for s in item.split("=", 1))
        if ";" in value:
            out[key] = [float(v) for v in value.split(";") if v.strip()]
        else:
            try:
                out[key] = int(value)
            except ValueError:
                out[key] = float(value)
    return out


# -- evaluation ---------------------------------------------------------------


def metric_at(m: ManifoldSpec, theta) -> np.ndarray:
    """Metric tensor at an in-domain point, checked symmetric positive definite."""
    theta = m.check_point(theta)
    g = np.asarray(m.metric(theta), dtype=float)
    n = m.dimension
    if g.shape != (n, n):
        raise MetricError(f"metric returned shape {g.shape}, expected {(n, n)}")
    if not np.all(np.isfinite(g)):
        raise MetricError(f"non-finite metric at {theta.tolist()}")
    asym = np.max(np.abs(g - g.T))
    if asym > 1e-12 * max(1.0, np.max(np.abs(g))):
        raise MetricError(f"metric not symmetric at {theta.tolist()} (max asymmetry {asym:.3g})")
    try:
        np.linalg.cholesky(g)
    except np.linalg.LinAlgError:
        raise MetricError(f"metric not positive definite at {theta.tolist()}") from None
    return g


def volume_element(m: ManifoldSpec, theta) -> float:
    """Riemannian volume density ``sqrt(|det g|)`` at a point."""
    g = metric_at(m, theta)
    return math.sqrt(abs(np.linalg.det(g)))


def volume_density(m: ManifoldSpec, points) -> np.ndarray:
    """Unchecked, vectorised ``sqrt(|det g|)`` for arrays of points ``(..., n)``."""
    points = np.asarray(points, dtype=float)
    if m.density is not None:
        return np.asarray(m.density(points), dtype=float)
    return np.sqrt(np.abs(np.linalg.det(np.asarray(m.metric(points), dtype=float))))
