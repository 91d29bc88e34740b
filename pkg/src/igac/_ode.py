"""Step-by-step ODE driver shared by the geodesic, Jacobi and oscillator flows.

Wraps scipy's embedded Dormand-Prince 4(5) stepper so that step counts,
early termination and dense output stay under our control.  A classic
fixed-step RK4 mode is kept for reproducibility studies.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from scipy.integrate import RK45, OdeSolution
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .exceptions import ConvergenceError


@dataclass(frozen=True)
class StepControl:
    """Integrator tolerances and limits.

    ``fixed_step`` switches from the adaptive 4(5) pair to classic RK4 with that
    step; tolerances are then ignored.
    """

    rtol: float = 1e-10
    atol: float = 1e-12
    max_step: float = np.inf
    max_steps: int = 1_000_000
    fixed_step: Optional[float] = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")
        if not self.max_step > 0:
            raise ValueError("max_step must be positive")
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.fixed_step is not None and not self.fixed_step > 0:
            raise ValueError("fixed_step must be positive")


@dataclass
class OdeResult:
    t: np.ndarray
    y: np.ndarray  # (len(t), dim)
    interpolant: Callable
    t_final: float
    status: str
    nfev: int
    nsteps: int


def _locate(interp, stop, t_lo, t_hi):
    f = lambda t: stop(t, interp(t))
    try:
        return brentq(f, t_lo, t_hi, xtol=1e-14, rtol=4 * np.finfo(float).eps)
    except ValueError:
        return t_lo


def integrate(
    fun: Callable[[float, np.ndarray], np.ndarray],
    t0: float,
    y0,
    t_end: float,
    control: StepControl,
    t_eval=None,
    stop: Optional[Callable[[float, np.ndarray], float]] = None,
    stop_status: str = "stopped",
) -> OdeResult:
    """Integrate ``y' = fun(t, y)`` from ``t0`` to ``t_end``.

    ``stop(t, y)`` is a margin function; integration halts (with
    ``status=stop_status``) at the first root where it turns non-positive.

    Raises:
        ConvergenceError: step-size underflow or ``max_steps`` exceeded.
    """
    y0 = np.asarray(y0, dtype=float)
    if not t_end > t0:
        raise ValueError(f"t_end={t_end} must exceed t0={t0}")
    counter = [0]

    def f(t, y):
        counter[0] += 1
        return fun(t, y)

    if control.fixed_step is not None:
        ts, ys, status = _rk4(f, t0, y0, t_end, control, stop, stop_status)
        dys = np.array([f(t, y) for t, y in zip(ts, ys)])
        if len(ts) < 2:
            raise ConvergenceError("stopped before the first step", achieved=None)
        spline = CubicHermiteSpline(ts, ys, dys, axis=0)
        interp = spline
        t_final = ts[-1]
        nsteps = len(ts) - 1
    else:
        solver = RK45(
            f, t0, y0, t_end, rtol=control.rtol, atol=control.atol, max_step=control.max_step
        )
        ts = [t0]
        pieces = []
        status = "completed"
        nsteps = 0
        while solver.status == "running":
            if nsteps >= control.max_steps:
                raise ConvergenceError(
                    f"max_steps={control.max_steps} exceeded at t={solver.t:.6g}", achieved=solver.t
                )
            message = solver.step()
            if solver.status == "failed":
                raise ConvergenceError(f"step-size underflow at t={solver.t:.6g}: {message}", achieved=solver.t)
            nsteps += 1
            piece = solver.dense_output()
            if stop is not None and stop(solver.t, solver.y) <= 0:
                t_hit = _locate(piece, stop, solver.t_old, solver.t)
                if t_hit > ts[-1]:
                    ts.append(t_hit)
                    pieces.append(piece)
                status = stop_status
                break
            ts.append(solver.t)
            pieces.append(piece)
        if not pieces:
            raise ConvergenceError("stopped before the first step", achieved=None)
        sol = OdeSolution(np.array(ts), pieces)
        interp = lambda t: sol(t).T if np.ndim(t) else sol(t)
        t_final = ts[-1]
        ys = None
        ts = np.array(ts)

    if t_eval is None:
        t_out = np.asarray(ts, dtype=float)
    else:
        t_eval = np.asarray(t_eval, dtype=float)
        t_out = t_eval[(t_eval >= t0) & (t_eval <= t_final)]
    y_out = np.asarray(interp(t_out), dtype=float).reshape(len(t_out), len(y0))
    if len(t_out) and t_out[0] == t0:
        y_out[0] = y0
    return OdeResult(t_out, y_out, interp, float(t_final), status, counter[0], nsteps)


def _rk4(f, t0, y0, t_end, control, stop, stop_status):
    h = control.fixed_step
    nsteps = int(np.ceil((t_end - t0) / h - 1e-12))
    if nsteps > control.max_steps:
        raise ConvergenceError(f"fixed step {h} needs {nsteps} > max_steps steps", achieved=None)
    ts = [t0]
    ys = [y0]
    t, y = t0, y0
    status = "completed"
    for k in range(nsteps):
        step = min(h, t_end - t)
        k1 = f(t, y)
        k2 = f(t + step / 2, y + step / 2 * k1)
        k3 = f(t + step / 2, y + step / 2 * k2)
        k4 = f(t + step, y + step * k3)
        y = y + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        t = t0 + (k + 1) * h if k + 1 < nsteps else t_end
        if stop is not None and stop(t, y) <= 0:
            status = stop_status
            break
        ts.append(t)
        ys.append(y)
    return np.array(ts), np.array(ys), status
