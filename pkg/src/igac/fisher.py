"""Fisher-Rao metrics of parametric families, by quadrature or Monte Carlo.

Built-in families:

* ``gaussian_1d``          p(x | mu, sigma) = N(mu, sigma^2)
* ``exponential_spacing``  p(s | mu) = exp(-s / mu) / mu                     (Poisson levels)
* ``wigner_dyson_spacing`` p(s | mu) = pi s / (2 mu^2) exp(-pi s^2 / (4 mu^2))  (GOE surmise)

Their Fisher metrics are ``diag(1, 2) / sigma^2``, ``1 / mu^2`` and ``4 / mu^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.integrate import quad_vec

from ._rng import ordered_map, substream
from .exceptions import ConvergenceError, SupportError
from .manifolds import DomainBox

#: Samples drawn per Monte-Carlo chunk; chunk ``c`` uses substream ``(seed, c)``.
MC_CHUNK = 1 << 16
#: Relative parameter step of the finite-difference score fallback.
SCORE_STEP = 1e-6
#: Built-in densities must integrate to one within this tolerance.
NORMALIZATION_TOL = 1e-8


@dataclass(frozen=True)
class IntegrationScheme:
    """How expectations over a family are computed.

    ``budget`` is the maximum number of integrand evaluations (quadrature) or
    samples (Monte Carlo).
    """

    kind: str = "quad"
    budget: int = 200_000
    tol: float = 1e-10
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("quad", "mc"):
            raise ValueError(f"unknown integration scheme {self.kind!r}; use 'quad' or 'mc'")
        if self.budget < 16:
            raise ValueError("budget must be >= 16")
        if not self.tol > 0:
            raise ValueError("tolerance must be positive")


@dataclass(frozen=True)
class DistributionFamily:
    """A parametric family ``p(x | theta)`` on a one-dimensional support.

    ``log_density`` and ``score`` are vectorised over ``x``; ``score`` returns
    shape ``(len(x), n_params)``.  ``center_scale`` gives a location and width
    used to place quadrature nodes; ``sample`` draws from the density.
    """

    name: str
    n_params: int
    support: tuple
    log_density: Callable
    param_domain: DomainBox
    score: Optional[Callable] = None
    sample: Optional[Callable] = None
    center_scale: Optional[Callable] = None
    param_names: tuple = ()

    def check_support(self, x):
        x = np.asarray(x, dtype=float)
        lo, hi = self.support
        bad = ~((x > lo) & (x < hi))
        if np.any(bad):
            first = x[bad].ravel()[0]
            raise SupportError(f"{self.name}: sample {first!r} outside support {self.support}")
        return x

    def score_or_fd(self, x, theta):
        if self.score is not None:
            return self.score(x, theta)
        return fd_score(self, x, theta)


def fd_score(family: DistributionFamily, x, theta) -> np.ndarray:
    """Central-difference score with step ``SCORE_STEP * max(1, |theta|)``."""
    theta = np.asarray(theta, dtype=float)
    x = np.asarray(x, dtype=float)
    h = SCORE_STEP * max(1.0, float(np.max(np.abs(theta))))
    cols = []
    for k in range(family.n_params):
        e = np.zeros_like(theta)
        e[k] = h
        cols.append((family.log_density(x, theta + e) - family.log_density(x, theta - e)) / (2 * h))
    return np.stack(cols, axis=-1)


# -- built-in families ----------------------------------------------------------

_HALF_LOG_2PI = 0.5 * math.log(2 * math.pi)


def _gaussian_1d():
    def logp(x, th):
        mu, sigma = th[0], th[1]
        z = (x - mu) / sigma
        return -0.5 * z * z - math.log(sigma) - _HALF_LOG_2PI

    def score(x, th):
        mu, sigma = th[0], th[1]
        d = x - mu
        return np.stack([d / sigma**2, -1.0 / sigma + d * d / sigma**3], axis=-1)

    def sample(rng, th, size):
        return rng.normal(th[0], th[1], size)

    return DistributionFamily(
        "gaussian_1d", 2, (-math.inf, math.inf), logp, DomainBox.from_kinds(["location", "scale"]),
        score, sample, lambda th: (th[0], th[1]), ("mu", "sigma"),
    )


def _exponential_spacing():
    def logp(x, th):
        mu = th[0]
        return -math.log(mu) - x / mu

    def score(x, th):
        mu = th[0]
        return (-1.0 / mu + np.asarray(x) / mu**2)[..., None]

    def sample(rng, th, size):
        return rng.exponential(th[0], size)

    return DistributionFamily(
        "exponential_spacing", 1, (0.0, math.inf), logp, DomainBox.from_kinds(["scale"]),
        score, sample, lambda th: (0.0, th[0]), ("mu",),
    )


def _wigner_dyson_spacing():
    def logp(x, th):
        mu = th[0]
        with np.errstate(divide="ignore"):
            return np.log(math.pi * np.asarray(x, dtype=float) / (2 * mu**2)) - math.pi * x**2 / (4 * mu**2)

    def score(x, th):
        mu = th[0]
        return (-2.0 / mu + math.pi * np.asarray(x) ** 2 / (2 * mu**3))[..., None]

    def sample(rng, th, size):
        # Rayleigh with mean mu
        return rng.rayleigh(th[0] * math.sqrt(2.0 / math.pi), size)

    return DistributionFamily(
        "wigner_dyson_spacing", 1, (0.0, math.inf), logp, DomainBox.from_kinds(["scale"]),
        score, sample, lambda th: (0.0, th[0]), ("mu",),
    )


_BUILTINS = {
    "gaussian_1d": _gaussian_1d,
    "exponential_spacing": _exponential_spacing,
    "wigner_dyson_spacing": _wigner_dyson_spacing,
}
_ALIASES = {"gaussian": "gaussian_1d", "exponential-spacing": "exponential_spacing",
            "wigner-dyson": "wigner_dyson_spacing"}


def get_family(name: str) -> DistributionFamily:
    """Look up a built-in family by name (CLI spellings accepted)."""
    key = _ALIASES.get(name, name)
    if key not in _BUILTINS:
        raise ValueError(f"unknown family {name!r}; expected one of {sorted(_BUILTINS)}")
    return _BUILTINS[key]()


# -- product families -----------------------------------------------------------


@dataclass(frozen=True)
class ProductFamily:
    """Independent product of families, ``p(x | theta) = prod_k p_k(x_k | theta_k)``.

    Parameters are ordered slot-major: first parameter of every component,
    then the second parameter of every component that has one, and so on.
    Two Gaussians therefore give ``(mu_1, mu_2, sigma_1, sigma_2)``.
    """

    components: tuple
    layout: tuple = field(init=False)  # layout[i] = (component, local parameter index)

    def __post_init__(self):
        if not self.components:
            raise ValueError("a product needs at least one component family")
        layout = []
        for j in range(max(f.n_params for f in self.components)):
            for k, f in enumerate(self.components):
                if j < f.n_params:
                    layout.append((k, j))
        object.__setattr__(self, "layout", tuple(layout))

    @property
    def name(self) -> str:
        return "*".join(f.name for f in self.components)

    @property
    def n_params(self) -> int:
        return len(self.layout)

    def split(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.n_params,):
            raise ValueError(f"{self.name}: expected {self.n_params} parameters, got {theta.shape}")
        parts = [np.empty(f.n_params) for f in self.components]
        for i, (k, j) in enumerate(self.layout):
            parts[k][j] = theta[i]
        return parts

    def log_density(self, x, theta):
        x = np.asarray(x, dtype=float)
        parts = self.split(theta)
        return sum(f.log_density(f.check_support(x[..., k]), parts[k])
                   for k, f in enumerate(self.components))


def compose_product(families: Sequence[DistributionFamily]) -> ProductFamily:
    """Independent product of ``families`` (block-diagonal Fisher metric)."""
    families = tuple(families)
    if not families:
        raise ValueError("compose_product needs a non-empty list of families")
    return ProductFamily(families)


# -- evaluation ---------------------------------------------------------------


def family_log_density(family, x, theta) -> float:
    """``log p(x | theta)`` with support and parameter-domain checks."""
    if isinstance(family, ProductFamily):
        return float(family.log_density(x, theta))
    theta = family.param_domain.check(theta, names=family.param_names)
    x = family.check_support(x)
    return float(family.log_density(x, theta))


@dataclass(frozen=True)
class FisherEstimate:
    """Fisher metric with a per-entry error estimate (quadrature error or MC standard error)."""

    metric: np.ndarray
    error: np.ndarray
    scheme: str
    normalization: float = 1.0
    score_mean: Optional[np.ndarray] = None


def _map_unit(family, theta):
    """Change of variable ``t in (0, 1) -> x`` and its Jacobian for the support."""
    lo, hi = family.support
    c, s = family.center_scale(theta) if family.center_scale else (0.0, 1.0)
    if lo == -math.inf and hi == math.inf:
        def fwd(t):
            return c + s * np.log(t / (1.0 - t)), s / (t * (1.0 - t))
    elif hi == math.inf:
        def fwd(t):
            return lo + s * (-np.log1p(-t)), s / (1.0 - t)
    elif lo == -math.inf:
        def fwd(t):
            return hi - s * (-np.log(t)), s / t
    else:
        def fwd(t):
            return lo + (hi - lo) * t, np.full_like(t, hi - lo)
    return fwd


def expectation_quad(family: DistributionFamily, theta, fn, scheme: IntegrationScheme):
    """``(integral of [p, p*fn(x)], error)`` by adaptive quadrature on the mapped unit interval."""
    fwd = _map_unit(family, theta)

    def integrand(t):
        x, jac = fwd(np.atleast_1d(t))
        p = np.exp(family.log_density(x, theta)) * jac
        vals = np.asarray(fn(x))
        return np.concatenate([p, (p[:, None] * vals).ravel()])

    limit = max(1, scheme.budget // 21)
    res, err = quad_vec(
        integrand, 0.0, 1.0, epsabs=scheme.tol * 1e-3, epsrel=scheme.tol, limit=limit, norm="max"
    )
    return res, err


def fisher_metric(family, theta, scheme: Optional[IntegrationScheme] = None) -> FisherEstimate:
    """``E[d_mu log p * d_nu log p]`` at ``theta``.

    Product families are assembled block by block, so their off-diagonal
    blocks are exactly zero.

    Raises:
        DomainError: ``theta`` outside the parameter domain.
        ConvergenceError: density not normalisable, or quadrature error above
            tolerance once the budget is spent (carries the achieved error).
    """
    scheme = scheme or IntegrationScheme()
    if isinstance(family, ProductFamily):
        return _product_metric(family, theta, scheme)
    theta = family.param_domain.check(theta, names=family.param_names)
    if scheme.kind == "mc":
        return _fisher_mc(family, theta, scheme)
    n = family.n_params

    def outer(x):
        s = family.score_or_fd(x, theta)
        return np.concatenate([s, np.einsum("xi,xj->xij", s, s).reshape(len(x), -1)], axis=1)

    res, err = expectation_quad(family, theta, outer, scheme)
    norm = res[0]
    if not abs(norm - 1.0) <= max(NORMALIZATION_TOL, 10 * scheme.tol):
        raise ConvergenceError(
            f"{family.name}: density integrates to {norm!r} at {theta.tolist()}", achieved=abs(norm - 1.0)
        )
    mean = res[1 : 1 + n]
    g = res[1 + n :].reshape(n, n)
    g = 0.5 * (g + g.T)
    scale = max(1.0, float(np.max(np.abs(g))))
    if err > scheme.tol * scale * 10:
        raise ConvergenceError(
            f"{family.name}: quadrature error {err:.3g} above tolerance within budget {scheme.budget}",
            achieved=err,
        )
    return FisherEstimate(g, np.full((n, n), err), "quad", float(norm), mean)


def _fisher_mc(family, theta, scheme, threads=None):
    if family.sample is None:
        raise ValueError(f"{family.name} has no sampler; use the quadrature scheme")
    n = family.n_params
    n_chunks = max(1, math.ceil(scheme.budget / MC_CHUNK))

    def chunk(c):
        size = min(MC_CHUNK, scheme.budget - c * MC_CHUNK)
        x = family.sample(substream(scheme.seed, c), theta, size)
        s = family.score_or_fd(x, theta)
        prod = np.einsum("xi,xj->xij", s, s)
        return size, prod.sum(axis=0), (prod**2).sum(axis=0), s.sum(axis=0)

    parts = ordered_map(chunk, range(n_chunks), threads)
    total = sum(p[0] for p in parts)
    s1 = sum(p[1] for p in parts)
    s2 = sum(p[2] for p in parts)
    mean = s1 / total
    var = np.maximum(s2 / total - mean**2, 0.0)
    se = np.sqrt(var / total)
    score_mean = sum(p[3] for p in parts) / total
    return FisherEstimate(0.5 * (mean + mean.T), se, "mc", 1.0, score_mean)


def _product_metric(family: ProductFamily, theta, scheme):
    parts = family.split(theta)
    blocks = [fisher_metric(f, p, scheme) for f, p in zip(family.components, parts)]
    n = family.n_params
    g = np.zeros((n, n))
    e = np.zeros((n, n))
    for a, (ka, ja) in enumerate(family.layout):
        for b, (kb, jb) in enumerate(family.layout):
            if ka == kb:
                g[a, b] = blocks[ka].metric[ja, jb]
                e[a, b] = blocks[ka].error[ja, jb]
    return FisherEstimate(g, e, scheme.kind)


def fisher_metric_from_hessian(family: DistributionFamily, theta, scheme: Optional[IntegrationScheme] = None,
                               rel_step: float = 1e-4) -> np.ndarray:
    """``-E[d_mu d_nu log p]`` with the Hessian from nested central differences.

    Independent of the score route; used to cross-check :func:`fisher_metric`.
    """
    # FD round-off is ~1e-8, so a tighter tolerance only burns the budget
    scheme = scheme or IntegrationScheme(tol=1e-7, budget=20_000)
    theta = family.param_domain.check(theta, names=family.param_names)
    n = family.n_params
    h = rel_step * np.maximum(1.0, np.abs(theta))

    def hessian(x):
        out = np.empty((len(x), n, n))
        for i in range(n):
            for j in range(n):
                ei = np.zeros(n)
                ej = np.zeros(n)
                ei[i] = h[i]
                ej[j] = h[j]
                f = lambda t: family.log_density(x, t)
                out[:, i, j] = (f(theta + ei + ej) - f(theta + ei - ej) - f(theta - ei + ej)
                                + f(theta - ei - ej)) / (4 * h[i] * h[j])
        return -out.reshape(len(x), -1)

    res, _ = expectation_quad(family, theta, hessian, scheme)
    g = res[1:].reshape(n, n)
    return 0.5 * (g + g.T)


__all__ = [
    "DistributionFamily",
    "FisherEstimate",
    "IntegrationScheme",
    "ProductFamily",
    "compose_product",
    "family_log_density",
    "fd_score",
    "fisher_metric",
    "fisher_metric_from_hessian",
    "get_family",
]
