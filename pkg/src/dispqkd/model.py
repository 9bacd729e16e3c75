"""Physical parameters of the source, the fibre channel and the detectors.

All frequencies are angular (rad/s), times in seconds, lengths in metres,
attenuation in dB/km.  Every type here is a frozen dataclass so instances can
be shared freely between threads and processes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Mapping

__all__ = [
    "ConfigError",
    "SourceSpec",
    "FiberSpec",
    "DetectorSpec",
    "LinkConfig",
    "CONFIG_KEYS",
    "validate",
    "jitter_sigma",
    "config_from_mapping",
    "config_to_mapping",
    "load_config",
    "parse_config_text",
]

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))
SPEED_OF_LIGHT = 299_792_458.0


class ConfigError(ValueError):
    """Raised when one or more parameter invariants are violated.

    ``violations`` maps each offending field name to a short reason.
    """

    def __init__(self, violations: Mapping[str, str]):
        self.violations = dict(violations)
        msg = "; ".join(f"{k}: {v}" for k, v in self.violations.items())
        super().__init__(f"invalid configuration ({msg})")


@dataclass(frozen=True)
class SourceSpec:
    """Gaussian joint spectrum of the photon pair."""

    sigma1: float
    sigma2: float
    rho: float
    omega0: float = 2.0 * math.pi * SPEED_OF_LIGHT / 1550e-9

    def swapped(self) -> "SourceSpec":
        """Exchange the roles of photon 1 and photon 2."""
        return replace(self, sigma1=self.sigma2, sigma2=self.sigma1)

    def violations(self, prefix: str = "") -> dict[str, str]:
        out = {}
        if not self.sigma1 > 0:
            out[prefix + "sigma1"] = "must be > 0"
        if not self.sigma2 > 0:
            out[prefix + "sigma2"] = "must be > 0"
        if not -1.0 < self.rho < 1.0:
            out[prefix + "rho"] = "must lie in the open interval (-1, 1); |rho| = 1 is singular"
        return out


@dataclass(frozen=True)
class FiberSpec:
    """Dispersive, lossy fibre; both arms of the link use the same spec.

    ``beta`` is half the group-velocity dispersion and keeps its sign.
    """

    beta: float = -1.15e-26
    alpha: float = 0.2
    length: float = 0.0

    def violations(self, prefix: str = "") -> dict[str, str]:
        out = {}
        if not math.isfinite(self.beta):
            out[prefix + "beta"] = "must be finite"
        if not self.alpha >= 0:
            out[prefix + "alpha"] = "must be >= 0"
        if not self.length >= 0:
            out[prefix + "length"] = "must be >= 0"
        return out


@dataclass(frozen=True)
class DetectorSpec:
    """Free-running detectors: dark count rate, FWHM jitter, source repetition rate."""

    dark_rate: float = 1e3
    jitter_fwhm: float = 0.0
    repetition_rate: float = 1e7

    @property
    def jitter_sigma(self) -> float:
        return jitter_sigma(self.jitter_fwhm)

    def violations(self, prefix: str = "") -> dict[str, str]:
        out = {}
        if not self.dark_rate >= 0:
            out[prefix + "dark_rate"] = "must be >= 0"
        if not self.jitter_fwhm >= 0:
            out[prefix + "jitter_fwhm"] = "must be >= 0"
        if not self.repetition_rate > 0:
            out[prefix + "repetition_rate"] = "must be > 0"
        return out


@dataclass(frozen=True)
class LinkConfig:
    """Source-in-the-middle link: one source, two identical fibre arms, two stations."""

    source: SourceSpec
    fiber: FiberSpec = field(default_factory=FiberSpec)
    detector: DetectorSpec = field(default_factory=DetectorSpec)
    window_multiplier: float = 6.0

    def with_length(self, length: float) -> "LinkConfig":
        return replace(self, fiber=replace(self.fiber, length=float(length)))

    def with_source(self, **changes) -> "LinkConfig":
        return replace(self, source=replace(self.source, **changes))

    def with_detector(self, **changes) -> "LinkConfig":
        return replace(self, detector=replace(self.detector, **changes))


def validate(config: LinkConfig) -> LinkConfig:
    """Return ``config`` unchanged, or raise :class:`ConfigError` listing every violation."""
    problems: dict[str, str] = {}
    problems.update(config.source.violations("source."))
    problems.update(config.fiber.violations("fiber."))
    problems.update(config.detector.violations("detector."))
    if not config.window_multiplier > 0:
        problems["window_multiplier"] = "must be > 0"
    if problems:
        raise ConfigError(problems)
    return config


def jitter_sigma(jitter_fwhm: float) -> float:
    """Standard deviation of a Gaussian timing jitter with the given FWHM."""
    if jitter_fwhm < 0:
        raise ConfigError({"jitter_fwhm": "must be >= 0"})
    return jitter_fwhm / FWHM_PER_SIGMA


# -- flat key = value configuration files -----------------------------------

# config key -> (dataclass path, default)
CONFIG_KEYS: dict[str, tuple[str, float]] = {
    "sigma1_rad_s": ("source.sigma1", 1.57e12),
    "sigma2_rad_s": ("source.sigma2", 1.57e12),
    "rho": ("source.rho", 0.9),
    "beta_s2_m": ("fiber.beta", -1.15e-26),
    "alpha_db_km": ("fiber.alpha", 0.2),
    "length_m": ("fiber.length", 0.0),
    "dark_rate_hz": ("detector.dark_rate", 1e3),
    "jitter_fwhm_s": ("detector.jitter_fwhm", 0.0),
    "rep_rate_hz": ("detector.repetition_rate", 1e7),
    "window_multiplier": ("window_multiplier", 6.0),
}


def config_from_mapping(values: Mapping[str, float]) -> LinkConfig:
    """Build and validate a config from documented keys; missing keys take defaults."""
    unknown = sorted(set(values) - set(CONFIG_KEYS))
    if unknown:
        raise ConfigError({k: "unknown configuration key" for k in unknown})
    merged = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    bad = {}
    for key, raw in values.items():
        try:
            merged[key] = float(raw)
        except (TypeError, ValueError):
            bad[key] = f"not a number: {raw!r}"
    if bad:
        raise ConfigError(bad)
    config = LinkConfig(
        source=SourceSpec(merged["sigma1_rad_s"], merged["sigma2_rad_s"], merged["rho"]),
        fiber=FiberSpec(merged["beta_s2_m"], merged["alpha_db_km"], merged["length_m"]),
        detector=DetectorSpec(merged["dark_rate_hz"], merged["jitter_fwhm_s"], merged["rep_rate_hz"]),
        window_multiplier=merged["window_multiplier"],
    )
    return validate(config)


def config_to_mapping(config: LinkConfig) -> dict[str, float]:
    out = {}
    for key, (path, _) in CONFIG_KEYS.items():
        obj = config
        for part in path.split("."):
            obj = getattr(obj, part)
        out[key] = float(obj)
    return out


def parse_config_text(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment, blank lines are ignored."""
    values: dict[str, str] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError({f"line {lineno}": f"expected 'key = value', got {line!r}"})
        key, value = (part.strip() for part in line.split("=", 1))
        if key in values:
            raise ConfigError({key: f"duplicate key (line {lineno})"})
        values[key] = value
    return values


def load_config(path: str | Path, overrides: Mapping[str, str] | None = None) -> LinkConfig:
    values = parse_config_text(Path(path).read_text()) if path is not None else {}
    if overrides:
        values.update(overrides)
    return config_from_mapping(values)
