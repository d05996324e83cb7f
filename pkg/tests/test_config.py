"""Configuration-file tests: syntax, typed overrides, unknown-key rejection
and environment-variable resolution."""

import pytest

from adaptix.config import (
    ENV_CONFIG,
    SCHEMA_VERSION,
    ToolConfig,
    apply_entries,
    load_config,
    parse_kv,
)
from adaptix.errors import ConfigError


def apply_text(text):
    return apply_entries(ToolConfig(), parse_kv(text))


def test_parse_kv_basics():
    entries = parse_kv("# comment\n\nkey = value\nspaced.key=  2  \n")
    assert entries == [(3, "key", "value"), (4, "spaced.key", "2")]


def test_parse_kv_syntax_error():
    with pytest.raises(ConfigError):
        parse_kv("not a key value line")
    with pytest.raises(ConfigError):
        parse_kv("= value")


def test_analysis_overrides():
    cfg = apply_text("analysis.grad_threshold = 2.5\n"
                     "analysis.tile_size = 32\n"
                     "analysis.range_percentiles = 1, 99\n")
    assert cfg.analysis.grad_threshold == 2.5
    assert cfg.analysis.tile_size == 32
    assert cfg.analysis.range_percentiles == (1.0, 99.0)
    # untouched fields keep their defaults
    assert cfg.analysis.noise_ratio == ToolConfig().analysis.noise_ratio


def test_profile_overrides():
    cfg = apply_text("profile.C1.ssim_min = 0.97\n"
                     "profile.c1.q_hi = 70\n"
                     "profile.C2.lossless_fallback = false\n"
                     "profile.C0.max_iterations = 5\n")
    assert cfg.profiles["C1"].ssim_min == 0.97
    assert cfg.profiles["C1"].q_bounds == (0.0, 70.0)
    assert not cfg.profiles["C2"].lossless_fallback
    assert cfg.profiles["C0"].max_iterations == 5
    # other profiles untouched
    assert cfg.profiles["C2"].ssim_min == 0.90


def test_metrics_overrides():
    cfg = apply_text("metrics.window = 7\nmetrics.gaussian_sigma = 1.2\n")
    assert cfg.ssim_params.window == 7
    assert cfg.ssim_params.gaussian_sigma == 1.2


def test_schema_version():
    assert apply_text("schema_version = %d\n" % SCHEMA_VERSION).schema_version \
        == SCHEMA_VERSION
    with pytest.raises(ConfigError):
        apply_text("schema_version = 99\n")


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError):
        apply_text("analysis.not_a_knob = 1\n")
    with pytest.raises(ConfigError):
        apply_text("profile.C7.ssim_min = 0.9\n")
    with pytest.raises(ConfigError):
        apply_text("profile.C1.frobnicate = 0.9\n")
    with pytest.raises(ConfigError):
        apply_text("totally.unknown = x\n")


def test_bad_values_rejected():
    with pytest.raises(ConfigError):
        apply_text("profile.C1.ssim_min = high\n")
    with pytest.raises(ConfigError):
        apply_text("profile.C1.lossless_fallback = maybe\n")
    with pytest.raises(ConfigError):
        apply_text("profile.C1.q_lo = 90\n")  # above default q_hi = 85


def test_bool_spellings():
    for text, expect in (("true", True), ("1", True), ("on", True),
                         ("false", False), ("0", False), ("off", False)):
        cfg = apply_text("profile.C1.lossless_fallback = %s\n" % text)
        assert cfg.profiles["C1"].lossless_fallback is expect


def test_load_config_from_env(tmp_path, monkeypatch):
    path = tmp_path / "adaptix.conf"
    path.write_text("profile.C1.psnr_min_db = 40.5\n")
    monkeypatch.setenv(ENV_CONFIG, str(path))
    assert load_config().profiles["C1"].psnr_min_db == 40.5
    monkeypatch.delenv(ENV_CONFIG)
    assert load_config().profiles["C1"].psnr_min_db == 39.0


def test_load_config_missing_file(tmp_path):
    with pytest.raises(ConfigError):
        load_config(str(tmp_path / "absent.conf"))


def test_defaults_without_config():
    cfg = load_config(None)
    assert set(cfg.profiles) == {"C0", "C1", "C2"}
    assert cfg.schema_version == SCHEMA_VERSION
