import math

import numpy as np
import pytest
from scipy import integrate

from igac import (ConvergenceError, DomainError, IntegrationScheme, SupportError, compose_product,
                  family_log_density, fisher_metric, fisher_metric_from_hessian, get_family)
from igac.fisher import DistributionFamily, fd_score
from igac.manifolds import DomainBox

FAMILIES = ["gaussian", "exponential-spacing", "wigner-dyson"]


def random_theta(fam, rng):
    if fam.n_params == 2:
        return np.array([rng.normal(0, 3), 10 ** rng.uniform(-1, 1)])
    return np.array([10 ** rng.uniform(-1, 1)])


def test_metric_examples():
    np.testing.assert_allclose(fisher_metric(get_family("gaussian"), [0, 1]).metric, np.diag([1, 2]),
                               rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(fisher_metric(get_family("exponential-spacing"), [2]).metric, [[0.25]], rtol=1e-9)
    np.testing.assert_allclose(fisher_metric(get_family("wigner-dyson"), [1]).metric, [[4.0]], rtol=1e-9)


def test_log_density_examples():
    assert family_log_density(get_family("gaussian"), 0.0, [0, 1]) == pytest.approx(-0.5 * math.log(2 * math.pi))
    assert family_log_density(get_family("exponential-spacing"), 2.0, [2]) == pytest.approx(math.log(0.5) - 1)
    # log(pi/2) - pi/4, evaluated directly
    assert family_log_density(get_family("wigner-dyson"), 1.0, [1]) == pytest.approx(
        math.log(math.pi / 2) - math.pi / 4, abs=1e-12)


def test_support_and_domain_errors():
    with pytest.raises(SupportError):
        family_log_density(get_family("exponential-spacing"), -1.0, [1])
    with pytest.raises(SupportError):
        family_log_density(get_family("wigner-dyson"), 0.0, [1])
    with pytest.raises(DomainError):
        fisher_metric(get_family("gaussian"), [0, -1])
    with pytest.raises(ValueError):
        get_family("cauchy")


@pytest.mark.parametrize("name", FAMILIES)
def test_closed_forms_at_random_points(name, rng):
    fam = get_family(name)
    for _ in range(5):
        th = random_theta(fam, rng)
        g = fisher_metric(fam, th).metric
        if name == "gaussian":
            expect = np.diag([1.0, 2.0]) / th[1] ** 2
        elif name == "exponential-spacing":
            expect = [[1 / th[0] ** 2]]
        else:
            expect = [[4 / th[0] ** 2]]
        np.testing.assert_allclose(g, expect, rtol=1e-8, atol=1e-12 * np.max(np.abs(expect)))


@pytest.mark.parametrize("name", FAMILIES)
def test_normalised_with_zero_mean_score(name, rng):
    fam = get_family(name)
    for _ in range(10):
        th = random_theta(fam, rng)
        lo, hi = fam.support
        total, _ = integrate.quad(lambda x: math.exp(fam.log_density(np.array([x]), th)[0]), lo, hi,
                                  epsabs=1e-13, epsrel=1e-12, limit=200)
        assert abs(total - 1) <= 1e-8
        est = fisher_metric(fam, th)
        scale = np.sqrt(np.diag(est.metric))
        assert np.all(np.abs(est.score_mean) <= 1e-6 * np.maximum(1.0, scale))


@pytest.mark.parametrize("name", FAMILIES)
def test_hessian_route_agrees(name, rng):
    fam = get_family(name)
    for _ in range(3):
        th = random_theta(fam, rng)
        g = fisher_metric(fam, th).metric
        h = fisher_metric_from_hessian(fam, th)
        assert np.max(np.abs(g - h)) <= 1e-4 * np.max(np.abs(g))


@pytest.mark.parametrize("name,theta", [("gaussian", [0.5, 1.5]), ("exponential-spacing", [2.0]),
                                        ("wigner-dyson", [1.0])])
def test_monte_carlo_agrees_with_quadrature(name, theta):
    fam = get_family(name)
    q = fisher_metric(fam, theta).metric
    mc = fisher_metric(fam, theta, IntegrationScheme("mc", budget=1_000_000, seed=3))
    assert np.all(np.abs(mc.metric - q) <= 3 * mc.error + 1e-12)


def test_monte_carlo_is_deterministic():
    fam = get_family("wigner-dyson")
    a = fisher_metric(fam, [1.0], IntegrationScheme("mc", budget=100_000, seed=11)).metric
    b = fisher_metric(fam, [1.0], IntegrationScheme("mc", budget=100_000, seed=11)).metric
    c = fisher_metric(fam, [1.0], IntegrationScheme("mc", budget=100_000, seed=12)).metric
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_finite_difference_score_matches_analytic(rng):
    fam = get_family("gaussian")
    x = rng.normal(size=50)
    th = np.array([0.3, 1.7])
    np.testing.assert_allclose(fd_score(fam, x, th), fam.score(x, th), rtol=1e-7, atol=1e-8)


def test_product_examples():
    g2 = compose_product([get_family("gaussian"), get_family("gaussian")])
    np.testing.assert_allclose(fisher_metric(g2, [0, 0, 1, 1]).metric, np.diag([1, 1, 2, 2]), atol=1e-9)
    e2 = compose_product([get_family("exponential-spacing")] * 2)
    np.testing.assert_allclose(fisher_metric(e2, [1, 1]).metric, np.eye(2), atol=1e-9)
    wg = compose_product([get_family("wigner-dyson"), get_family("gaussian")])
    g = fisher_metric(wg, [1, 0, 1]).metric
    np.testing.assert_allclose(g, np.diag([4, 1, 2]), atol=1e-9)
    assert g[0, 1] == 0.0 and g[0, 2] == 0.0


def test_product_off_blocks_exactly_zero():
    fam = compose_product([get_family("gaussian"), get_family("gaussian"), get_family("gaussian")])
    g = fisher_metric(fam, [0.1, -0.2, 0.3, 1.0, 2.0, 0.5]).metric
    for i in range(3):
        for j in range(3):
            if i != j:
                assert g[i, j] == 0.0 and g[3 + i, 3 + j] == 0.0 and g[i, 3 + j] == 0.0


def test_product_log_density_sums():
    fam = compose_product([get_family("wigner-dyson"), get_family("gaussian")])
    lp = family_log_density(fam, [1.0, 0.0], [1.0, 0.0, 1.0])
    assert lp == pytest.approx(math.log(math.pi / 2) - math.pi / 4 - 0.5 * math.log(2 * math.pi))


def test_compose_rejects_empty():
    with pytest.raises(ValueError):
        compose_product([])


def test_unnormalised_density_is_reported():
    fam = DistributionFamily(
        "half-normal-unnormalised", 1, (0.0, math.inf),
        lambda x, th: -0.5 * (x / th[0]) ** 2,
        DomainBox.from_kinds(["scale"]),
    )
    with pytest.raises(ConvergenceError) as exc:
        fisher_metric(fam, [1.0])
    assert exc.value.achieved is not None


def test_scheme_validation():
    with pytest.raises(ValueError):
        IntegrationScheme("simpson")
    with pytest.raises(ValueError):
        IntegrationScheme(budget=8)
    with pytest.raises(ValueError):
        IntegrationScheme(tol=0)
