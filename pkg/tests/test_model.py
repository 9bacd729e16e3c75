import math

import pytest

from dispqkd.model import (
    CONFIG_KEYS,
    ConfigError,
    DetectorSpec,
    FiberSpec,
    LinkConfig,
    SourceSpec,
    config_from_mapping,
    config_to_mapping,
    jitter_sigma,
    load_config,
    parse_config_text,
    validate,
)


def test_defaults_match_documented_values():
    cfg = config_from_mapping({})
    assert cfg.source.sigma1 == cfg.source.sigma2 == 1.57e12
    assert cfg.source.rho == 0.9
    assert cfg.fiber.beta == -1.15e-26
    assert cfg.fiber.alpha == 0.2
    assert cfg.detector.dark_rate == 1e3
    assert cfg.detector.repetition_rate == 1e7
    assert cfg.window_multiplier == 6.0


def test_beta_sign_is_kept():
    assert FiberSpec().beta < 0


@pytest.mark.parametrize("rho", [1.0, -1.0, 1.5])
def test_singular_rho_rejected(rho):
    with pytest.raises(ConfigError) as exc:
        validate(LinkConfig(SourceSpec(1e12, 1e12, rho)))
    assert "source.rho" in exc.value.violations


def test_all_violations_reported_together():
    cfg = LinkConfig(
        SourceSpec(-1.0, 0.0, 0.0),
        FiberSpec(length=-5.0, alpha=-1.0),
        DetectorSpec(dark_rate=-1.0, jitter_fwhm=-1.0, repetition_rate=0.0),
        window_multiplier=0.0,
    )
    with pytest.raises(ConfigError) as exc:
        validate(cfg)
    assert set(exc.value.violations) == {
        "source.sigma1",
        "source.sigma2",
        "fiber.length",
        "fiber.alpha",
        "detector.dark_rate",
        "detector.jitter_fwhm",
        "detector.repetition_rate",
        "window_multiplier",
    }


def test_config_error_is_value_error():
    assert issubclass(ConfigError, ValueError)


def test_jitter_fwhm_to_sigma():
    assert jitter_sigma(0.0) == 0.0
    assert jitter_sigma(2.3548200450309493e-12) == pytest.approx(1e-12, rel=1e-15)
    assert DetectorSpec(jitter_fwhm=20e-12).jitter_sigma == pytest.approx(20e-12 / 2.354820045)
    with pytest.raises(ConfigError):
        jitter_sigma(-1.0)


def test_swapped_exchanges_widths():
    s = SourceSpec(1.0, 2.0, 0.3).swapped()
    assert (s.sigma1, s.sigma2, s.rho) == (2.0, 1.0, 0.3)


def test_with_helpers_return_new_configs():
    cfg = config_from_mapping({})
    assert cfg.with_length(10).fiber.length == 10.0
    assert cfg.with_source(rho=0.0).source.rho == 0.0
    assert cfg.with_detector(dark_rate=0).detector.dark_rate == 0
    assert cfg.fiber.length == 0.0


def test_mapping_round_trip():
    values = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    values.update(rho=-0.5, length_m=1234.0, jitter_fwhm_s=5e-11)
    assert config_to_mapping(config_from_mapping(values)) == values


def test_unknown_key_is_hard_error():
    with pytest.raises(ConfigError) as exc:
        config_from_mapping({"sigma_1": 1.0})
    assert "sigma_1" in exc.value.violations


def test_non_numeric_value():
    with pytest.raises(ConfigError) as exc:
        config_from_mapping({"rho": "strong"})
    assert "rho" in exc.value.violations


def test_parse_config_text_comments_and_blanks():
    text = "# source\nrho = -0.9   # negative\n\n  length_m=40e3\n"
    assert parse_config_text(text) == {"rho": "-0.9", "length_m": "40e3"}


@pytest.mark.parametrize("text", ["rho 0.9\n", "rho = 0.9\nrho = 0.1\n"])
def test_parse_config_text_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_load_config_with_overrides(tmp_path):
    path = tmp_path / "link.cfg"
    path.write_text("rho = 0.5\ndark_rate_hz = 100\n")
    cfg = load_config(path, {"rho": "-0.2"})
    assert cfg.source.rho == -0.2
    assert cfg.detector.dark_rate == 100.0
    assert load_config(None).source.rho == 0.9


def test_default_central_wavelength():
    assert 2 * math.pi * 299_792_458.0 / SourceSpec(1, 1, 0).omega0 == pytest.approx(1550e-9)
