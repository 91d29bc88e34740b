import math

import numpy as np
import pytest

from igac import (DegenerateRegionError, FrequencySpectrum, GeodesicState, GrowthClass, build_manifold,
                  classify_growth, ensemble_ige, explored_region, ige_series, integrate_geodesic,
                  statistical_weight)
from igac.ige import Sweep
from igac.manifolds import euclidean_manifold

from conftest import unit_geodesic


@pytest.fixture(scope="module")
def log_geodesic():
    m = build_manifold("integrable")
    v = np.full(2, 1 / math.sqrt(2))
    grid = np.linspace(5, 50, 46)
    t_eval = np.union1d(np.linspace(0, 50, 501), grid)
    return m, integrate_geodesic(m, GeodesicState(0, [1, 1], v), 50.0, t_eval=t_eval), grid


def test_integrable_weight(log_geodesic):
    m, p, _ = log_geodesic
    w = statistical_weight(m, p, 2.0)
    assert w.value == pytest.approx(2.0, abs=1e-6)
    assert w.method == "quadrature"


def test_unit_interval_weight():
    m = euclidean_manifold(1)
    p = integrate_geodesic(m, GeodesicState(0, [0.0], [1.0]), 2.0)
    assert statistical_weight(m, p, 1.0).value == pytest.approx(1.0, abs=1e-12)


def test_degenerate_sweep_names_coordinate(gaussian1):
    p = integrate_geodesic(gaussian1, GeodesicState(0, [0, 1], [0, 0.5]), 3.0)
    with pytest.raises(DegenerateRegionError) as exc:
        statistical_weight(gaussian1, p, 2.0)
    assert exc.value.coordinate == "mu_1"
    assert "mu_1" in str(exc.value)


def test_integrable_closed_form(log_geodesic):
    m, p, grid = log_geodesic
    s = ige_series(m, p, grid)
    np.testing.assert_allclose(s.S, 2 * np.log(grid) - math.log(6), atol=1e-3)
    assert s.S[np.searchsorted(grid, 10)] == pytest.approx(2 * math.log(10) - math.log(6), abs=1e-3)
    c = classify_growth(s)
    assert c.growth == GrowthClass.LOGARITHMIC
    assert c.rate == pytest.approx(2.0, abs=1e-3)
    assert c.r2_log >= 0.99


def test_monotone_region_and_weight(gaussian1):
    p = unit_geodesic(gaussian1, [0, 1], [0.5, -1], 8.0, np.linspace(0, 8, 161))
    sweep = Sweep(p)
    taus = np.linspace(0.5, 8, 16)
    regions = [sweep.region(t) for t in taus]
    assert all(b.contains(a) for a, b in zip(regions, regions[1:]))
    weights = [statistical_weight(gaussian1, p, t).value for t in taus]
    assert np.all(np.diff(weights) >= 0)
    r = explored_region(p, 4.0)
    assert r.lower[1] == pytest.approx(np.min(p.state_at(np.linspace(0, 4, 2001))[0][:, 1]), rel=1e-6)


def test_contracting_gaussian_is_linear(gaussian1):
    grid = np.linspace(1, 12, 23)
    p = unit_geodesic(gaussian1, [0, 1], [0.5, -1], 12.0, np.union1d(np.linspace(0, 12, 241), grid))
    s = ige_series(gaussian1, p, grid)
    assert np.all(np.diff(s.S) > 0)
    c = classify_growth(s)
    assert c.growth == GrowthClass.LINEAR and c.r2_linear >= 0.98


def test_chaotic_manifold_is_linear():
    m = build_manifold("chaotic")
    grid = np.linspace(1, 20, 39)
    p = unit_geodesic(m, [1, 0, 1], [0.5, 0.5, -1], 20.0, np.union1d(np.linspace(0, 20, 401), grid))
    c = classify_growth(ige_series(m, p, grid))
    assert c.growth == GrowthClass.LINEAR and c.r2_linear >= 0.98


def test_quadrature_and_monte_carlo_agree():
    m = build_manifold("chaotic")
    p = unit_geodesic(m, [1, 0, 1], [0.5, 0.5, -1], 6.0, np.linspace(0, 6, 121))
    for t in (2.0, 5.0):
        q = statistical_weight(m, p, t, method="quadrature")
        mc = statistical_weight(m, p, t, budget=1 << 16, method="monte-carlo", seed=5)
        assert abs(q.value - mc.value) <= 3 * mc.error


def test_monte_carlo_independent_of_threads():
    m = build_manifold("gaussian", {"l": 2})
    v = np.array([0.5, 0.5, -1.0, -1.0])
    p = unit_geodesic(m, [0, 0, 1, 1], v, 4.0, np.linspace(0, 4, 81))
    grid = np.linspace(1, 4, 4)
    a = ige_series(m, p, grid, budget=1 << 15, seed=9, threads=1)
    b = ige_series(m, p, grid, budget=1 << 15, seed=9, threads=3)
    assert a.method == "monte-carlo"
    assert np.array_equal(a.S, b.S) and np.array_equal(a.weight, b.weight)


def test_grid_validation(log_geodesic):
    m, p, _ = log_geodesic
    with pytest.raises(ValueError):
        ige_series(m, p, [5, 4, 6])
    with pytest.raises(ValueError):
        ige_series(m, p, [10, 60])
    with pytest.raises(ValueError):
        ige_series(m, p, [0, 10])


def test_classifier_synthetic():
    t = np.linspace(1, 20, 40)
    c = classify_growth((t, 0.5 * t + 1))
    assert c.growth == GrowthClass.LINEAR and c.rate == pytest.approx(0.5)
    c = classify_growth((t, 2 * np.log(t) + 0.3))
    assert c.growth == GrowthClass.LOGARITHMIC and c.rate == pytest.approx(2.0)
    c = classify_growth((t, np.sin(t)))
    assert c.growth == GrowthClass.UNDETERMINED and math.isnan(c.rate)


def test_classifier_margin_rule():
    # both fits excellent on a narrow window far from the origin: no winner
    t = np.linspace(100, 101, 20)
    c = classify_growth((t, np.log(t)))
    assert c.r2_linear >= 0.98 and c.r2_log >= 0.98
    assert c.growth == GrowthClass.UNDETERMINED


def test_classifier_errors():
    t = np.linspace(1, 5, 8)
    with pytest.raises(ValueError, match="need >= 10"):
        classify_growth((t, t))
    t = np.linspace(-1, 5, 20)
    with pytest.raises(ValueError):
        classify_growth((t, t))


def test_classifier_window():
    t = np.linspace(1, 60, 237)
    S = np.where(t < 2, np.log(t), np.log(2) + 0.3 * (t - 2))
    c = classify_growth((t, S), window=(3, 60))
    assert c.growth == GrowthClass.LINEAR and c.rate == pytest.approx(0.3)
    assert c.window == (3.0, 60.0)


def test_spectrum_draws():
    s = FrequencySpectrum(3, 1.0, 0.0)
    assert np.array_equal(s.draw(5), np.ones(3))
    s = FrequencySpectrum(4, 0.1, 1.0, seed=2)
    d = s.draw(0)
    assert np.all(d > 0) and np.array_equal(d, s.draw(0)) and not np.array_equal(d, s.draw(1))
    with pytest.raises(ValueError):
        FrequencySpectrum(0, 1.0)
    with pytest.raises(ValueError):
        FrequencySpectrum(1, -1.0)


def test_zero_variance_ensemble_is_sample_independent():
    grid = np.linspace(1, 8, 29)
    a = ensemble_ige(FrequencySpectrum(1, 1.0, 0.0), 1.0, 0.0, grid, 1)
    b = ensemble_ige(FrequencySpectrum(1, 1.0, 0.0), 1.0, 0.0, grid, 32)
    assert np.array_equal(a.series.S, b.series.S)
    assert a.classification.growth == GrowthClass.LINEAR


def test_ensemble_deterministic_across_threads():
    grid = np.linspace(1, 6, 21)
    spec = FrequencySpectrum(1, 1.0, 0.2, seed=4)
    a = ensemble_ige(spec, 1.0, 0.0, grid, 4, threads=1)
    b = ensemble_ige(spec, 1.0, 0.0, grid, 4, threads=2)
    assert np.array_equal(a.series.S, b.series.S)
    assert np.array_equal(a.frequencies, b.frequencies)


def test_ensemble_rejects_no_samples():
    with pytest.raises(ValueError):
        ensemble_ige(FrequencySpectrum(1, 1.0), 1.0, 0.0, np.linspace(1, 5, 11), 0)
