"""Connection and curvature of a manifold at a point.

Index conventions (all arrays indexed in the order the symbols are written):

* ``gamma[r, m, n]``   = Gamma^r_{mn}
* ``riemann[m, n, r, s]`` = R^m_{nrs}
  = d_r Gamma^m_{ns} - d_s Gamma^m_{nr} + Gamma^m_{rl} Gamma^l_{ns} - Gamma^m_{sl} Gamma^l_{nr}
* ``ricci[n, s]``      = R^r_{nrs}

With this convention the unit sphere has positive scalar curvature and the
``l``-Gaussian manifold has scalar curvature ``-l``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError, MetricError
from .manifolds import ManifoldSpec, metric_at

#: Relative step for finite-difference metric derivatives.
METRIC_STEP = 1e-5
#: Relative step for finite-difference Christoffel derivatives.
CHRISTOFFEL_STEP = 1e-4


def _steps(theta, rel, m: ManifoldSpec = None):
    """``rel * max(1, |theta|)``, shrunk to ``rel * distance`` next to a finite bound.

    The second rule keeps scale-type coordinates usable arbitrarily close to
    zero, where the step becomes relative to the coordinate itself.
    """
    scale = np.maximum(1.0, np.abs(theta))
    if m is not None:
        lo = np.asarray(m.domain.lower, dtype=float)
        hi = np.asarray(m.domain.upper, dtype=float)
        scale = np.minimum(scale, np.minimum(theta - lo, hi - theta))
    return rel * scale


def _check_interior(m: ManifoldSpec, theta, h):
    theta = m.check_point(theta)
    lo = np.asarray(m.domain.lower, dtype=float)
    hi = np.asarray(m.domain.upper, dtype=float)
    close = (theta - lo <= 2 * h) | (hi - theta <= 2 * h)
    if np.any(close):
        k = int(np.flatnonzero(close)[0])
        raise DomainError(
            f"{m.coordinate_names[k]}={theta[k]!r} within 2h={2 * h[k]:.3g} of the domain boundary"
        )
    return theta


def metric_derivatives(m: ManifoldSpec, theta, rel_step: float = METRIC_STEP) -> np.ndarray:
    """``dg[r, m, n] = d_r g_{mn}``; analytic when available, else central differences."""
    theta = np.asarray(theta, dtype=float)
    if m.metric_derivative is not None:
        return np.asarray(m.metric_derivative(theta), dtype=float)
    n = m.dimension
    h = _steps(theta, rel_step, m)
    shifts = np.eye(n) * h[:, None]
    plus = np.asarray(m.metric(theta + shifts), dtype=float)
    minus = np.asarray(m.metric(theta - shifts), dtype=float)
    return (plus - minus) / (2.0 * h)[:, None, None]


def _christoffel_from(g, dg):
    ginv = np.linalg.inv(g)
    # T[l, m, n] = d_m g_{ln} + d_n g_{lm} - d_l g_{mn}
    t = np.transpose(dg, (1, 0, 2)) + np.transpose(dg, (1, 2, 0)) - dg
    return 0.5 * np.einsum("rl,lmn->rmn", ginv, t)


def christoffel_raw(m: ManifoldSpec, theta) -> np.ndarray:
    """Christoffel symbols without domain checks (used inside integrators)."""
    theta = np.asarray(theta, dtype=float)
    g = np.asarray(m.metric(theta), dtype=float)
    return _christoffel_from(g, metric_derivatives(m, theta))


def christoffel(m: ManifoldSpec, theta, rel_step: float = METRIC_STEP) -> np.ndarray:
    """Levi-Civita connection coefficients ``gamma[r, m, n] = Gamma^r_{mn}``.

    Raises:
        DomainError: point outside the domain or within two derivative steps of
            its boundary.
        MetricError: singular or indefinite metric.
    """
    theta = _check_interior(m, theta, _steps(np.asarray(theta, dtype=float), rel_step, m))
    g = metric_at(m, theta)
    return _christoffel_from(g, metric_derivatives(m, theta, rel_step))


def riemann_raw(m: ManifoldSpec, theta, rel_step: float = CHRISTOFFEL_STEP, gamma=None) -> np.ndarray:
    """Riemann tensor ``R^m_{nrs}`` by central differences of the connection, unchecked."""
    theta = np.asarray(theta, dtype=float)
    n = m.dimension
    h = _steps(theta, rel_step, m)
    if gamma is None:
        gamma = christoffel_raw(m, theta)
    dgam = np.empty((n, n, n, n))  # dgam[a, r, m, n] = d_a Gamma^r_{mn}
    for a in range(n):
        e = np.zeros(n)
        e[a] = h[a]
        # fourth-order central stencil: truncation stays far below round-off
        dgam[a] = (8.0 * (christoffel_raw(m, theta + e) - christoffel_raw(m, theta - e))
                   - (christoffel_raw(m, theta + 2 * e) - christoffel_raw(m, theta - 2 * e))) / (12.0 * h[a])
    # d_r Gamma^m_{ns} -> [m, n, r, s]
    d1 = np.transpose(dgam, (1, 2, 0, 3))
    quad = np.einsum("mrl,lns->mnrs", gamma, gamma)
    return d1 - np.transpose(d1, (0, 1, 3, 2)) + quad - np.transpose(quad, (0, 1, 3, 2))


@dataclass(frozen=True)
class CurvatureBundle:
    """Curvature tensors evaluated at one point."""

    point: np.ndarray
    metric: np.ndarray
    christoffel: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float

    @property
    def riemann_lowered(self) -> np.ndarray:
        """``R_{mnrs} = g_{ml} R^l_{nrs}``."""
        return np.einsum("ml,lnrs->mnrs", self.metric, self.riemann)


def curvature_tensors(m: ManifoldSpec, theta, rel_step: float = CHRISTOFFEL_STEP) -> CurvatureBundle:
    """Riemann, Ricci and scalar curvature at ``theta``.

    ``rel_step`` sets the central-difference step for the connection
    derivatives, ``h = rel_step * max(1, |theta_a|)``.
    """
    theta = np.asarray(theta, dtype=float)
    theta = _check_interior(m, theta, _steps(theta, max(rel_step, METRIC_STEP), m))
    g = metric_at(m, theta)
    gamma = christoffel_raw(m, theta)
    riem = riemann_raw(m, theta, rel_step, gamma=gamma)
    ricci = np.einsum("rnrs->ns", riem)
    scalar = float(np.einsum("ns,ns->", np.linalg.inv(g), ricci))
    return CurvatureBundle(theta, g, gamma, riem, ricci, scalar)


def scalar_curvature(m: ManifoldSpec, theta, rel_step: float = CHRISTOFFEL_STEP) -> float:
    return curvature_tensors(m, theta, rel_step).scalar


def _sectional(bundle: CurvatureBundle, u, v) -> float:
    g = bundle.metric
    uu, vv, uv = u @ g @ u, v @ g @ v, u @ g @ v
    gram = uu * vv - uv * uv
    if gram <= 1e-12 * max(uu * vv, 1e-300):
        raise ValueError("degenerate tangent plane: u and v are linearly dependent")
    num = np.einsum("mnrs,m,n,r,s->", bundle.riemann_lowered, u, v, u, v)
    return float(num / gram)


def sectional_curvature(m: ManifoldSpec, theta, u, v, rel_step: float = CHRISTOFFEL_STEP) -> float:
    """Sectional curvature ``K(u, v) = <R(u,v)v, u> / (|u|^2 |v|^2 - <u,v>^2)``.

    Raises:
        ValueError: ``u`` and ``v`` span a degenerate plane.
    """
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    if u.shape != (m.dimension,) or v.shape != (m.dimension,):
        raise ValueError(f"tangent vectors must have shape ({m.dimension},)")
    return _sectional(curvature_tensors(m, theta, rel_step), u, v)


def orthonormal_frame(g: np.ndarray) -> np.ndarray:
    """Gram-Schmidt of the coordinate basis w.r.t. ``g``; rows are frame vectors."""
    n = g.shape[0]
    frame = []
    for k in range(n):
        w = np.zeros(n)
        w[k] = 1.0
        for e in frame:
            w = w - (e @ g @ w) * e
        frame.append(w / np.sqrt(w @ g @ w))
    return np.array(frame)


def sectional_by_plane(m: ManifoldSpec, theta, rel_step: float = CHRISTOFFEL_STEP) -> dict:
    """Sectional curvature of each plane ``(e_i, e_j)``, ``i < j``, of the orthonormalised coordinate frame."""
    bundle = curvature_tensors(m, theta, rel_step)
    frame = orthonormal_frame(bundle.metric)
    out = {}
    for i, j in itertools.combinations(range(m.dimension), 2):
        out[(i, j)] = _sectional(bundle, frame[i], frame[j])
    return out


def sectional_sum(m: ManifoldSpec, theta, rel_step: float = CHRISTOFFEL_STEP) -> float:
    """Sum of ``K(e_i, e_j)`` over ordered pairs ``i != j``; equals the scalar curvature."""
    return 2.0 * sum(sectional_by_plane(m, theta, rel_step).values())


def weyl_anisotropy(m: ManifoldSpec, theta, rel_step: float = CHRISTOFFEL_STEP) -> np.ndarray:
    """Deviation of the lowered Riemann tensor from constant curvature.

    ``W_{mnrs} = R_{mnrs} - R / (n (n - 1)) (g_{mr} g_{ns} - g_{ms} g_{nr})``,
    which vanishes identically on spaces of constant sectional curvature.
    """
    n = m.dimension
    if n < 2:
        raise ValueError("anisotropy tensor needs dimension >= 2")
    bundle = curvature_tensors(m, theta, rel_step)
    g = bundle.metric
    model = np.einsum("mr,ns->mnrs", g, g) - np.einsum("ms,nr->mnrs", g, g)
    return bundle.riemann_lowered - bundle.scalar / (n * (n - 1)) * model


__all__ = [
    "CHRISTOFFEL_STEP",
    "METRIC_STEP",
    "CurvatureBundle",
    "MetricError",
    "christoffel",
    "christoffel_raw",
    "curvature_tensors",
    "metric_derivatives",
    "orthonormal_frame",
    "riemann_raw",
    "scalar_curvature",
    "sectional_by_plane",
    "sectional_curvature",
    "sectional_sum",
    "weyl_anisotropy",
]
