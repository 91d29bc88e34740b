import textwrap

import pytest

from igac import ConfigError
from igac.config import bundled_config, load_config, parse_config

try:
    import tomllib
except ImportError:  # pragma: no cover
    import tomli as tomllib


def parse(text):
    return parse_config(tomllib.loads(textwrap.dedent(text)))


BASE = """
[manifold]
name = "gaussian"
params = { l = 1 }
[geodesic]
theta = [0.0, 1.0]
thetadot = [0.5, -1.0]
tau_max = 10.0
[ige]
grid = { start = 1.0, stop = 10.0, num = 19 }
"""


def test_bundled_configs_load():
    for name in ("gaussian_l1", "integrable", "chaotic_levels", "iho_ensemble"):
        cfg = load_config(bundled_config(name))
        assert len(cfg.config_hash) == 64


def test_defaults():
    cfg = parse(BASE)
    assert cfg.manifold == "gaussian" and cfg.geodesic.rtol == 1e-10
    assert cfg.curvature.enabled and cfg.jacobi.enabled and cfg.ige.enabled
    assert cfg.output.seed == 0 and cfg.output.formats == ("csv", "json")
    assert len(cfg.ige.grid) == 19


def test_problems_are_listed_with_paths():
    text = BASE.replace('name = "gaussian"', 'name = "torus"').replace("tau_max = 10.0", "tau_max = -1.0")
    text += "\n[output]\nseed = -3\nformats = ['xml']\n[extra]\nx = 1\n"
    with pytest.raises(ConfigError) as exc:
        parse(text)
    paths = {p for p, _ in exc.value.problems}
    assert {"manifold.name", "geodesic.tau_max", "output.seed", "output.formats", "extra"} <= paths


def test_dimension_checked_against_manifold():
    with pytest.raises(ConfigError) as exc:
        parse(BASE.replace("theta = [0.0, 1.0]", "theta = [0.0, 1.0, 2.0]"))
    assert exc.value.problems[0][0] == "geodesic.theta"


def test_seed_range():
    parse(BASE + "[output]\nseed = 18446744073709551615\n")
    with pytest.raises((ConfigError, tomllib.TOMLDecodeError)):
        parse(BASE + "[output]\nseed = 18446744073709551616\n")
    cfg = parse(BASE)
    with pytest.raises(ConfigError):
        cfg.with_overrides(seed=-1)
    assert cfg.with_overrides(seed=5).output.seed == 5


def test_grid_must_fit_geodesic():
    with pytest.raises(ConfigError) as exc:
        parse(BASE.replace("stop = 10.0", "stop = 12.0"))
    assert exc.value.problems[0][0] == "ige.grid"


def test_missing_sections():
    with pytest.raises(ConfigError) as exc:
        parse("[ige]\ngrid = [1.0, 2.0]\n")
    paths = {p for p, _ in exc.value.problems}
    assert {"manifold", "geodesic"} <= paths


def test_ensemble_only_config():
    cfg = parse("""
    [ensemble]
    l = 2
    omega_mean = 1.0
    omega_std = 0.1
    samples = 4
    seed = 3
    [ige]
    grid = [1.0, 2.0, 3.0]
    """)
    assert cfg.manifold == "iho" and cfg.ensemble.samples == 4 and cfg.ensemble_seed == 3


def test_hash_ignores_output_location():
    a = parse(BASE)
    b = a.with_overrides(directory="elsewhere", formats=("csv",))
    assert a.config_hash == b.config_hash
    assert a.config_hash != a.with_overrides(seed=1).config_hash


def test_unreadable_and_invalid_files(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("[manifold\nname=")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(bad)
    with pytest.raises(ConfigError):
        bundled_config("nonexistent")
