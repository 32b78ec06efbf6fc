from dataclasses import replace

import pytest

from lidar_roi.types import (
    ConfigError,
    FilterParams,
    LidarConfig,
    VLP16_ELEVATIONS,
    apply_overrides,
    load_config,
    parse_config_text,
    validate_config,
)


def test_defaults_are_valid():
    validate_config(LidarConfig(), FilterParams())
    assert LidarConfig().elevations[0] == 15.0
    assert LidarConfig().elevations[-1] == -15.0
    assert len(VLP16_ELEVATIONS) == 16


@pytest.mark.parametrize(
    "cfg_kw, params_kw, field",
    [
        ({"elevations": VLP16_ELEVATIONS[:15]}, {}, "elevations"),
        ({}, {"pc": 9, "window": 8}, "pc"),
        ({}, {"pc": 0}, "pc"),
        ({"width": 1}, {}, "width"),
        ({"channels": 1, "elevations": (0.0,)}, {}, "channels"),
        ({"elevations": tuple(reversed(VLP16_ELEVATIONS))}, {}, "elevations"),
        ({}, {"window": 1}, "window"),
        ({}, {"window": 15, "pc": 5}, "window"),
        ({}, {"beta": 0.0}, "beta"),
        ({}, {"beta": 90.0}, "beta"),
        ({}, {"theta_seg": -1.0}, "theta_seg"),
        ({}, {"sigma_x": 0.0}, "sigma_x"),
        ({}, {"sigma_n": -1.0}, "sigma_n"),
        ({}, {"persistence_threshold": 1.5}, "persistence_threshold"),
        ({}, {"connectivity": 6}, "connectivity"),
    ],
)
def test_violations(cfg_kw, params_kw, field):
    with pytest.raises(ConfigError) as exc:
        validate_config(replace(LidarConfig(), **cfg_kw), replace(FilterParams(), **params_kw))
    assert exc.value.field == field


def test_config_file_roundtrip(tmp_path):
    path = tmp_path / "c.conf"
    path.write_text(
        "# comment\n"
        "lidar.width = 1024\n"
        "lidar.elevations = 2, 0, -2, -4  # degrees\n"
        "filter.pc = 2\nfilter.window = 2\nfilter.beta = 7.5\n"
        "bf.sigma_x = 1.0\nbf.sigma_n = 2.0\n"
        "peaks.persistence_threshold = 0.2\n"
        "segment.theta_seg = 12\nsegment.depth_epsilon = 0.05\n"
    )
    cfg, params = load_config(path)
    assert cfg.width == 1024
    assert cfg.elevations == (2.0, 0.0, -2.0, -4.0)
    assert cfg.channels == 4
    assert (params.pc, params.window, params.beta) == (2, 2, 7.5)
    assert (params.sigma_x, params.sigma_n) == (1.0, 2.0)
    assert params.persistence_threshold == 0.2
    assert (params.theta_seg, params.depth_epsilon) == (12.0, 0.05)
    validate_config(cfg, params)


def test_unknown_key_and_bad_value():
    with pytest.raises(ConfigError, match="unknown"):
        apply_overrides(LidarConfig(), FilterParams(), {"filter.nope": "1"})
    with pytest.raises(ConfigError) as exc:
        apply_overrides(LidarConfig(), FilterParams(), {"filter.pc": "five"})
    assert exc.value.field == "filter.pc"
    with pytest.raises(ConfigError):
        parse_config_text("just words\n")
