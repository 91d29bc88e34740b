"""Jacobi fields along geodesics and their exponential divergence rate."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ._ode import StepControl, integrate
from .curvature import christoffel_raw, orthonormal_frame, riemann_raw
from .exceptions import ConvergenceError
from .geodesic import GeodesicPath, _boundary_margin
from .manifolds import ManifoldSpec, metric_at

#: Fraction of the integrated span (taken from its end) used when no fit window is given.
DEFAULT_WINDOW_FRACTION = 0.6


@dataclass(frozen=True)
class JacobiField:
    tau: np.ndarray
    J: np.ndarray
    DJ: np.ndarray
    intensity: np.ndarray
    theta: np.ndarray
    thetadot: np.ndarray
    manifold_name: str
    status: str


@dataclass(frozen=True)
class ExponentFit:
    exponent: float
    intercept: float
    window: tuple
    r2: float
    n_points: int
    config_hash: Optional[str] = None


def jlc_rhs(m: ManifoldSpec):
    """Geodesic plus Jacobi-Levi-Civita system in the state ``(theta, theta', J, DJ)``.

    ``DJ`` is the covariant derivative of ``J`` along the geodesic, so
    ``dJ/dtau = DJ - Gamma(theta', J)`` and
    ``d(DJ)/dtau = -R(J, theta')theta' - Gamma(theta', DJ)``.
    """
    n = m.dimension

    def rhs(t, y):
        theta, v, J, P = y[:n], y[n : 2 * n], y[2 * n : 3 * n], y[3 * n :]
        gamma = christoffel_raw(m, theta)
        riem = riemann_raw(m, theta, gamma=gamma)
        acc = -np.einsum("rmn,m,n->r", gamma, v, v)
        dJ = P - np.einsum("rab,a,b->r", gamma, v, J)
        dP = -np.einsum("mnrs,n,r,s->m", riem, v, J, v) - np.einsum("rab,a,b->r", gamma, v, P)
        return np.concatenate([v, acc, dJ, dP])

    return rhs


def default_deviation(m: ManifoldSpec, theta, thetadot):
    """Standard initial condition ``J0 = 0``, ``|DJ0| = 1``, ``DJ0`` orthogonal to ``theta'``.

    ``DJ0`` is the normalised sum of an orthonormal basis of the complement
    of ``theta'``, so it has a component along every transverse direction.
    """
    g = metric_at(m, theta)
    n = m.dimension
    if n < 2:
        raise ValueError("a transverse Jacobi field needs dimension >= 2")
    v = np.asarray(thetadot, dtype=float)
    basis = [v / np.sqrt(v @ g @ v)]
    for k in range(n):
        w = np.zeros(n)
        w[k] = 1.0
        for e in basis:
            w = w - (e @ g @ w) * e
        norm2 = w @ g @ w
        if norm2 > 1e-20:
            basis.append(w / np.sqrt(norm2))
        if len(basis) == n:
            break
    d = np.sum(basis[1:], axis=0)
    d = d / np.sqrt(d @ g @ d)
    return np.zeros(n), d


def integrate_jlc(
    m: ManifoldSpec,
    path: GeodesicPath,
    J0,
    DJ0,
    control: Optional[StepControl] = None,
    t_eval: Optional[Sequence[float]] = None,
) -> JacobiField:
    """Integrate the geodesic-deviation equation along ``path``.

    The geodesic is re-integrated jointly with the field from the path's
    initial state, so curvature is always evaluated on the exact trajectory.
    Output is sampled at ``t_eval`` (default: the path's own samples).

    Raises:
        ValueError: dimension mismatch or a path with fewer than two samples.
        ConvergenceError: integrator failure.
    """
    n = m.dimension
    J0 = np.asarray(J0, dtype=float)
    DJ0 = np.asarray(DJ0, dtype=float)
    if J0.shape != (n,) or DJ0.shape != (n,):
        raise ValueError(f"J0 and DJ0 must have shape ({n},)")
    if len(path) < 2:
        raise ValueError("path too sparse: need at least two samples")
    control = control or path.control
    t0 = path.tau_start
    y0 = np.concatenate([path.theta[0], path.thetadot[0], J0, DJ0])
    if t_eval is None:
        t_eval = path.tau
    res = integrate(
        jlc_rhs(m), t0, y0, path.tau_end, control, t_eval,
        stop=_boundary_margin(m), stop_status="boundary_exit",
    )
    theta, v = res.y[:, :n], res.y[:, n : 2 * n]
    J, P = res.y[:, 2 * n : 3 * n], res.y[:, 3 * n :]
    g = np.asarray(m.metric(theta), dtype=float)
    intensity = np.sqrt(np.abs(np.einsum("im,imn,in->i", J, g, J)))
    return JacobiField(res.t, J, P, intensity, theta, v, m.name, res.status)


def _linear_fit(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ coef
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 0.0
    return float(coef[0]), float(coef[1]), float(min(1.0, max(0.0, r2)))


def default_window(tau) -> tuple:
    lo, hi = float(tau[0]), float(tau[-1])
    return (hi - DEFAULT_WINDOW_FRACTION * (hi - lo), hi)


def divergence_exponent(field: JacobiField, window: Optional[Sequence[float]] = None) -> ExponentFit:
    """Least-squares slope of ``log |J|`` against tau over ``window``.

    Raises:
        ValueError: window outside the sampled range, fewer than 10 samples in
            it, or a vanishing intensity inside it.
    """
    tau = field.tau
    if window is None:
        window = default_window(tau)
    lo, hi = float(window[0]), float(window[1])
    if not lo < hi:
        raise ValueError(f"empty fit window [{lo}, {hi}]")
    if lo < tau[0] - 1e-9 or hi > tau[-1] + 1e-9:
        raise ValueError(f"window [{lo}, {hi}] outside sampled range [{tau[0]}, {tau[-1]}]")
    sel = (tau >= lo - 1e-9) & (tau <= hi + 1e-9)
    if sel.sum() < 10:
        raise ValueError(f"only {int(sel.sum())} samples in window [{lo}, {hi}]; need >= 10")
    inten = field.intensity[sel]
    if np.any(inten <= 0):
        raise ValueError("zero Jacobi intensity inside the fit window")
    slope, intercept, r2 = _linear_fit(tau[sel], np.log(inten))
    return ExponentFit(slope, intercept, (lo, hi), r2, int(sel.sum()))


__all__ = [
    "ConvergenceError",
    "ExponentFit",
    "JacobiField",
    "default_deviation",
    "default_window",
    "divergence_exponent",
    "integrate_jlc",
    "jlc_rhs",
]
