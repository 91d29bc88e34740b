"""scikit-learn style wrappers around the analysis stages.

The numerical core is functional; these classes give it the familiar
``fit`` / ``predict`` / ``transform`` shape so the stages compose with
sklearn utilities (``get_params``, ``clone``, pipelines).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from ._ode import StepControl
from .fisher import IntegrationScheme, fisher_metric, get_family
from .geodesic import GeodesicState, integrate_geodesic, unit_speed
from .ige import GrowthClass, classify_growth, ige_series
from .jacobi import DEFAULT_WINDOW_FRACTION, _linear_fit, default_deviation, divergence_exponent, integrate_jlc
from .manifolds import build_manifold
from .report import chaos_report


def _tau_column(X):
    X = check_array(X, ensure_2d=False, dtype=float)
    if X.ndim == 2:
        if X.shape[1] != 1:
            raise ValueError(f"expected a single tau column, got shape {X.shape}")
        X = X[:, 0]
    return X


def _window_mask(tau, window, fraction):
    if window is None:
        lo, hi = tau.min(), tau.max()
        if fraction is not None:
            lo = hi - fraction * (hi - lo)
    else:
        lo, hi = window
    return (tau >= lo - 1e-12) & (tau <= hi + 1e-12), (float(lo), float(hi))


class FisherRaoMetric(TransformerMixin, BaseEstimator):
    """Map parameter vectors to their (flattened) Fisher-Rao metric.

    Parameters
    ----------
    family : str
        ``gaussian``, ``exponential-spacing`` or ``wigner-dyson``.
    scheme : {"quad", "mc"}
    budget, tol, seed : integration controls.
    """

    def __init__(self, family="gaussian", scheme="quad", budget=200000, tol=1e-10, seed=0):
        self.family = family
        self.scheme = scheme
        self.budget = budget
        self.tol = tol
        self.seed = seed

    def fit(self, X, y=None):
        self.family_ = get_family(self.family)
        X = check_array(X, dtype=float)
        if X.shape[1] != self.family_.n_params:
            raise ValueError(f"{self.family_.name} takes {self.family_.n_params} parameters, got {X.shape[1]}")
        self.n_features_in_ = X.shape[1]
        self.scheme_ = IntegrationScheme(self.scheme, self.budget, self.tol, self.seed)
        return self

    def transform(self, X):
        check_is_fitted(self, "family_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        return np.array([fisher_metric(self.family_, x, self.scheme_).metric.ravel() for x in X])


class JacobiExponentEstimator(RegressorMixin, BaseEstimator):
    """Exponential-growth fit ``log y = exponent * tau + intercept``.

    ``X`` is the tau column and ``y`` the Jacobi intensity.  Without an
    explicit ``window`` the last ``window_fraction`` of the span is used.
    """

    def __init__(self, window=None, window_fraction=DEFAULT_WINDOW_FRACTION):
        self.window = window
        self.window_fraction = window_fraction

    def fit(self, X, y):
        tau = _tau_column(X)
        y = check_array(y, ensure_2d=False, dtype=float)
        if y.shape != tau.shape:
            raise ValueError("X and y lengths differ")
        sel, win = _window_mask(tau, self.window, self.window_fraction)
        if sel.sum() < 10:
            raise ValueError(f"only {int(sel.sum())} samples in window {win}; need >= 10")
        if np.any(y[sel] <= 0):
            raise ValueError("intensities must be positive inside the window")
        self.exponent_, self.intercept_, self.r2_ = _linear_fit(tau[sel], np.log(y[sel]))
        self.window_ = win
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "exponent_")
        return np.exp(self.intercept_ + self.exponent_ * _tau_column(X))


class GrowthClassifier(BaseEstimator):
    """Linear-versus-logarithmic classifier for an entropy series ``S(tau)``.

    After ``fit(tau, S)``: ``growth_``, ``rate_``, ``r2_linear_``, ``r2_log_``.
    ``predict`` evaluates the winning model (NaN when undetermined).
    """

    def __init__(self, window=None):
        self.window = window

    def fit(self, X, y):
        tau = _tau_column(X)
        S = check_array(y, ensure_2d=False, dtype=float)
        c = classify_growth((tau, S), self.window)
        self.classification_ = c
        self.growth_ = c.growth
        self.rate_ = c.rate
        self.r2_linear_ = c.r2_linear
        self.r2_log_ = c.r2_log
        sel, _ = _window_mask(tau, c.window, None)
        if c.growth == GrowthClass.LINEAR:
            self._coef = _linear_fit(tau[sel], S[sel])[:2]
        elif c.growth == GrowthClass.LOGARITHMIC:
            self._coef = _linear_fit(np.log(tau[sel]), S[sel])[:2]
        else:
            self._coef = None
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "growth_")
        tau = _tau_column(X)
        if self._coef is None:
            return np.full(tau.shape, np.nan)
        a, b = self._coef
        x = tau if self.growth_ == GrowthClass.LINEAR else np.log(tau)
        return a * x + b

    def score(self, X, y):
        """r^2 of the winning model on ``(X, y)``."""
        y = np.asarray(y, dtype=float)
        pred = self.predict(X)
        if np.any(np.isnan(pred)):
            return float("nan")
        ss_tot = np.sum((y - y.mean()) ** 2)
        return 1.0 - np.sum((y - pred) ** 2) / ss_tot if ss_tot > 0 else 0.0


class ChaosIndicator(BaseEstimator):
    """Chaos verdict for each initial condition on a built-in manifold.

    Each row of ``X`` is ``(theta, thetadot)``; ``predict`` returns one of
    ``"chaotic"``, ``"regular"``, ``"inconclusive"`` per row and stores the
    full reports in ``reports_``.
    """

    def __init__(self, manifold="gaussian", params=None, tau_max=20.0, grid=None,
                 jacobi_window=None, ige_window=None, budget=1 << 18, rtol=1e-10, atol=1e-12):
        self.manifold = manifold
        self.params = params
        self.tau_max = tau_max
        self.grid = grid
        self.jacobi_window = jacobi_window
        self.ige_window = ige_window
        self.budget = budget
        self.rtol = rtol
        self.atol = atol

    def fit(self, X=None, y=None):
        self.manifold_ = build_manifold(self.manifold, self.params or {})
        self.n_features_in_ = 2 * self.manifold_.dimension
        if X is not None:
            self._rows(X)
        return self

    def _rows(self, X):
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"rows must hold theta and thetadot ({self.n_features_in_} values)")
        return X

    def _one(self, row):
        m = self.manifold_
        n = m.dimension
        theta = row[:n]
        grid = np.asarray(self.grid if self.grid is not None else np.linspace(1.0, self.tau_max, 39))
        t_eval = np.union1d(np.linspace(0.0, self.tau_max, 401), grid)
        path = integrate_geodesic(m, GeodesicState(0.0, theta, unit_speed(m, theta, row[n:])),
                                  self.tau_max, StepControl(rtol=self.rtol, atol=self.atol), t_eval)
        J0, DJ0 = default_deviation(m, theta, path.thetadot[0])
        fit = divergence_exponent(integrate_jlc(m, path, J0, DJ0), self.jacobi_window)
        cls = classify_growth(ige_series(m, path, grid, budget=self.budget), self.ige_window)
        return chaos_report(None, fit, cls, m.name)

    def predict(self, X):
        check_is_fitted(self, "manifold_")
        X = self._rows(X)
        self.reports_ = [self._one(row) for row in X]
        return np.array([r.verdict for r in self.reports_])


__all__ = ["ChaosIndicator", "FisherRaoMetric", "GrowthClassifier", "JacobiExponentEstimator"]
