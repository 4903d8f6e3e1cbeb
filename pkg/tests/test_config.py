"""Config parsing, serialization round-trips, and validation errors."""

import pytest

from photonsync import config
from photonsync.params import ConfigError, SourceParams, SystemConfig


def test_roundtrip_default():
    cfg = SystemConfig()
    text = config.config_to_text(cfg)
    assert config.parse_config_text(text) == cfg
    assert config.config_hash(cfg) == config.config_hash(
        config.parse_config_text(text))


def test_roundtrip_modified():
    cfg = SystemConfig().with_(source=SourceParams(r1_cps=440_000.0,
                                                   rho=0.10))
    assert config.parse_config_text(config.config_to_text(cfg)) == cfg


def test_unit_suffixes():
    cfg = config.parse_config_text(
        "electronics.tau_d1_ns = 1.525us\n"
        "electronics.tau_d2_ns = 260000ps\n")
    assert cfg.electronics.tau_d1_ps == 1_525_000
    assert cfg.electronics.tau_d2_ps == 260_000


def test_comments_and_blank_lines():
    cfg = config.parse_config_text(
        "# heading\n\nsource.r1_cps = 200000  # inline comment\n")
    assert cfg.source.r1_cps == 200_000.0
    # r2 keeps the default ratio when not given
    assert cfg.source.r2_cps == pytest.approx(0.97 * 200_000.0)


def test_parse_errors():
    with pytest.raises(ConfigError, match="line 1"):
        config.parse_config_text("not a key value pair\n")
    with pytest.raises(ConfigError, match="duplicate"):
        config.parse_config_text("source.rho = 0.1\nsource.rho = 0.2\n")
    with pytest.raises(ConfigError, match="unknown config keys"):
        config.parse_config_text("source.bogus = 1\n")
    with pytest.raises(ConfigError, match="cannot parse"):
        config.parse_config_text("source.rho = abc\n")
    with pytest.raises(ConfigError, match="unit suffix"):
        config.parse_config_text("source.rho = 3ns\n")


def test_validation_errors():
    with pytest.raises(ConfigError):
        config.parse_config_text("source.rho = 1.5\n")
    with pytest.raises(ConfigError):
        config.parse_config_text("sim.trigger_mode = bogus\n")
    with pytest.raises(ConfigError):
        config.parse_config_text("detector.efficiency = -0.1\n")


def test_file_roundtrip(tmp_path):
    cfg = SystemConfig().with_(source=SourceParams(r1_cps=123_456.0))
    path = tmp_path / "point.cfg"
    config.save_config(cfg, path)
    assert config.load_config(path) == cfg


def test_reference_config_matches_dataclass_defaults():
    assert config.reference_config() == SystemConfig()
