"""Geodesic flow on a manifold and the inverted-harmonic-oscillator flow."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from ._ode import StepControl, integrate
from .curvature import christoffel_raw
from .exceptions import DomainError
from .manifolds import ManifoldSpec, build_manifold, metric_at

#: Integration stops when a trajectory comes this close to a finite domain bound.
BOUNDARY_STOP = 1e-9
#: Oscillator flows stop once any coordinate exceeds this magnitude.
OVERFLOW_GUARD = 1e150


@dataclass(frozen=True)
class GeodesicState:
    tau: float
    theta: np.ndarray
    thetadot: np.ndarray

    def __post_init__(self):
        theta = np.array(self.theta, dtype=float)
        thetadot = np.array(self.thetadot, dtype=float)
        if theta.shape != thetadot.shape or theta.ndim != 1:
            raise ValueError("theta and thetadot must be vectors of equal length")
        if not np.all(np.isfinite(thetadot)):
            raise ValueError("thetadot must be finite")
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "thetadot", thetadot)
        object.__setattr__(self, "tau", float(self.tau))


@dataclass(frozen=True)
class GeodesicPath:
    """Sampled geodesic with a dense-output interpolant.

    ``status`` is ``"completed"``, ``"boundary_exit"`` or ``"overflow"``; in the
    latter two cases ``tau_end`` is where integration stopped.
    """

    manifold: ManifoldSpec
    tau: np.ndarray
    theta: np.ndarray
    thetadot: np.ndarray
    initial_norm: float
    status: str
    control: StepControl
    nfev: int
    nsteps: int
    tau_end: float
    interpolant: Callable = field(repr=False, compare=False)

    @property
    def dimension(self) -> int:
        return self.theta.shape[1]

    @property
    def tau_start(self) -> float:
        return float(self.tau[0])

    def __len__(self):
        return len(self.tau)

    def state_at(self, tau):
        """Interpolated ``(theta, thetadot)`` at one or more parameter values."""
        tau_arr = np.asarray(tau, dtype=float)
        if np.any(tau_arr < self.tau_start - 1e-12) or np.any(tau_arr > self.tau_end + 1e-12):
            raise ValueError(f"tau outside path span [{self.tau_start}, {self.tau_end}]")
        y = np.asarray(self.interpolant(np.clip(tau_arr, self.tau_start, self.tau_end)))
        n = self.dimension
        return y[..., :n], y[..., n : 2 * n]

    def final_state(self) -> GeodesicState:
        theta, thetadot = self.state_at(self.tau_end)
        return GeodesicState(self.tau_end, theta, thetadot)


def _norm(g, v):
    return float(v @ g @ v)


def geodesic_rhs(m: ManifoldSpec):
    n = m.dimension

    def rhs(t, y):
        theta, v = y[:n], y[n:]
        gamma = christoffel_raw(m, theta)
        acc = -np.einsum("rmn,m,n->r", gamma, v, v)
        return np.concatenate([v, acc])

    return rhs


def _boundary_margin(m: ManifoldSpec):
    if np.all(np.isinf(m.domain.lower)) and np.all(np.isinf(m.domain.upper)):
        return None
    n = m.dimension
    return lambda t, y: float(m.domain.distance_to_boundary(y[:n])) - BOUNDARY_STOP


def integrate_geodesic(
    m: ManifoldSpec,
    s0: GeodesicState,
    tau_max: float,
    control: Optional[StepControl] = None,
    t_eval: Optional[Sequence[float]] = None,
) -> GeodesicPath:
    """Solve ``theta'' + Gamma(theta', theta') = 0`` from ``s0`` up to ``tau_max``.

    Sampling follows ``t_eval`` when given, otherwise the integrator's own
    steps.  A trajectory that runs to within ``BOUNDARY_STOP`` of the domain
    edge ends early with ``status == "boundary_exit"``.

    Raises:
        DomainError: initial point outside the domain.
        ConvergenceError: step-size underflow or step budget exhausted.
    """
    control = control or StepControl()
    theta0 = m.check_point(s0.theta)
    if s0.thetadot.shape != theta0.shape:
        raise ValueError(f"thetadot must have length {m.dimension}")
    if not tau_max > s0.tau:
        raise ValueError(f"tau_max={tau_max} must exceed the initial tau={s0.tau}")
    g0 = metric_at(m, theta0)
    y0 = np.concatenate([theta0, s0.thetadot])
    res = integrate(
        geodesic_rhs(m), s0.tau, y0, float(tau_max), control, t_eval,
        stop=_boundary_margin(m), stop_status="boundary_exit",
    )
    n = m.dimension
    return GeodesicPath(
        m, res.t, res.y[:, :n], res.y[:, n:], _norm(g0, s0.thetadot), res.status, control,
        res.nfev, res.nsteps, res.t_final, res.interpolant,
    )


def unit_speed(m: ManifoldSpec, theta, direction) -> np.ndarray:
    """Rescale ``direction`` to unit metric norm at ``theta``."""
    direction = np.asarray(direction, dtype=float)
    g = metric_at(m, theta)
    return direction / np.sqrt(_norm(g, direction))


def norm_drift(m: ManifoldSpec, path: GeodesicPath) -> np.ndarray:
    """``g(theta', theta') - g(theta'_0, theta'_0)`` at every sample."""
    g = np.asarray(m.metric(path.theta), dtype=float)
    norms = np.einsum("im,imn,in->i", path.thetadot, g, path.thetadot)
    return norms - path.initial_norm


def killing_conservation(m: ManifoldSpec, xi: Callable, path: GeodesicPath) -> np.ndarray:
    """``g(xi, theta')`` along the path; constant in tau when ``xi`` is a Killing field."""
    g = np.asarray(m.metric(path.theta), dtype=float)
    xs = np.array([np.asarray(xi(th), dtype=float) for th in path.theta])
    return np.einsum("im,imn,in->i", xs, g, path.thetadot)


def reverse(path: GeodesicPath) -> GeodesicState:
    """Final state with its velocity negated, as a fresh initial state at ``tau = 0``."""
    end = path.final_state()
    return GeodesicState(0.0, end.theta, -end.thetadot)


def iho_trajectories(
    omega: Sequence[float],
    theta0: Sequence[float],
    thetadot0: Sequence[float],
    tau_max: float,
    control: Optional[StepControl] = None,
    t_eval: Optional[Sequence[float]] = None,
) -> GeodesicPath:
    """Integrate ``theta_k'' = omega_k^2 theta_k`` for each oscillator.

    This is the geodesic flow of the ``iho`` manifold after the change of
    affine parameter that makes the line element ``2 (1 - Phi)^2 dtau^2``.  The
    returned path lives on ``build_manifold("iho", omega=omega)``; its
    ``initial_norm`` is the metric norm of the initial velocity.  The flow stops
    with ``status == "overflow"`` once any ``|theta_k|`` exceeds ``OVERFLOW_GUARD``.
    """
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1 or len(omega) == 0 or np.any(omega <= 0):
        raise ValueError("omega must be a non-empty list of positive frequencies")
    theta0 = np.asarray(theta0, dtype=float)
    thetadot0 = np.asarray(thetadot0, dtype=float)
    if theta0.shape != omega.shape or thetadot0.shape != omega.shape:
        raise ValueError("need one (theta0, thetadot0) pair per oscillator")
    m = build_manifold("iho", {"omega": omega.tolist()})
    control = control or StepControl()
    w2 = omega**2
    n = len(omega)

    def rhs(t, y):
        return np.concatenate([y[n:], w2 * y[:n]])

    def guard(t, y):
        return OVERFLOW_GUARD - float(np.max(np.abs(y[:n])))

    res = integrate(
        rhs, 0.0, np.concatenate([theta0, thetadot0]), float(tau_max), control, t_eval,
        stop=guard, stop_status="overflow",
    )
    g0 = metric_at(m, theta0)
    return GeodesicPath(
        m, res.t, res.y[:, :n], res.y[:, n:], _norm(g0, thetadot0), res.status, control,
        res.nfev, res.nsteps, res.t_final, res.interpolant,
    )


def iho_energy(path: GeodesicPath) -> np.ndarray:
    """Per-oscillator invariant ``theta_k'^2 - omega_k^2 theta_k^2``, shape ``(samples, l)``."""
    w2 = np.asarray(path.manifold.params["omega"]) ** 2
    return path.thetadot**2 - w2 * path.theta**2


__all__ = [
    "BOUNDARY_STOP",
    "DomainError",
    "GeodesicPath",
    "GeodesicState",
    "OVERFLOW_GUARD",
    "StepControl",
    "integrate_geodesic",
    "iho_energy",
    "iho_trajectories",
    "killing_conservation",
    "norm_drift",
    "reverse",
    "unit_speed",
]
