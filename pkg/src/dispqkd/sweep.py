"""Parameter lattices and the row builders shared by the CLI subcommands."""
from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import qkd, stats
from .biphoton import BiphotonState
from .model import CONFIG_KEYS, ConfigError, LinkConfig, config_from_mapping, config_to_mapping
from .qkd import Scenario

__all__ = [
    "Axis",
    "Levels",
    "SweepSpec",
    "parse_axis",
    "parse_values",
    "stats_row",
    "keyrate_row",
    "maxdist_row",
    "correlation_row",
    "run_sweep",
    "QUANTITIES",
    "ALIASES",
]

# axis names that set several configuration keys at once
ALIASES = {"sigma_rad_s": ("sigma1_rad_s", "sigma2_rad_s")}


def _known(name: str) -> bool:
    return name in CONFIG_KEYS or name in ALIASES


def _expand(name: str) -> tuple[str, ...]:
    return ALIASES.get(name, (name,))


@dataclass(frozen=True)
class Axis:
    name: str
    lo: float
    hi: float
    count: int
    spacing: str = "lin"

    def __post_init__(self):
        problems = {}
        if not _known(self.name):
            keys = ", ".join([*CONFIG_KEYS, *ALIASES])
            problems[self.name] = f"not a configuration key (choose from {keys})"
        if self.count < 2:
            problems["count"] = "must be >= 2"
        if not self.lo < self.hi:
            problems["range"] = f"min must be < max (got {self.lo:g}, {self.hi:g})"
        if self.spacing not in ("lin", "log"):
            problems["spacing"] = "must be 'lin' or 'log'"
        elif self.spacing == "log" and not self.lo > 0:
            problems["range"] = "log spacing needs min > 0"
        if problems:
            raise ConfigError(problems)

    def values(self) -> np.ndarray:
        if self.spacing == "log":
            return np.geomspace(self.lo, self.hi, self.count)
        return np.linspace(self.lo, self.hi, self.count)


@dataclass(frozen=True)
class Levels:
    """An axis given by an explicit list of values."""

    name: str
    levels: tuple[float, ...]

    def __post_init__(self):
        if not _known(self.name):
            raise ConfigError({self.name: "not a configuration key"})
        if not self.levels:
            raise ConfigError({self.name: "needs at least one value"})

    def values(self) -> np.ndarray:
        return np.asarray(self.levels, dtype=float)


def parse_axis(text: str) -> Axis:
    """``name:min:max:count[:lin|log]``."""
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise ConfigError({"axis": f"expected name:min:max:count[:lin|log], got {text!r}"})
    try:
        lo, hi, count = float(parts[1]), float(parts[2]), int(parts[3])
    except ValueError as exc:
        raise ConfigError({"axis": f"bad number in {text!r}"}) from exc
    return Axis(parts[0], lo, hi, count, parts[4] if len(parts) == 5 else "lin")


def parse_values(text: str) -> list[float]:
    """Comma list (``0,10,100``) or a range ``min:max:count[:lin|log]`` (count may be 1)."""
    try:
        if ":" in text:
            parts = text.split(":")
            if len(parts) not in (3, 4):
                raise ValueError
            lo, hi, count = float(parts[0]), float(parts[1]), int(parts[2])
            spacing = parts[3] if len(parts) == 4 else "lin"
            if count == 1:
                return [lo]
            if count < 1 or spacing not in ("lin", "log") or (spacing == "log" and lo <= 0):
                raise ValueError
            vals = np.geomspace(lo, hi, count) if spacing == "log" else np.linspace(lo, hi, count)
            return [float(v) for v in vals]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise ConfigError({"values": f"cannot parse {text!r}"}) from None


def stats_row(config: LinkConfig) -> dict:
    state = BiphotonState.from_config(config)
    tj = config.detector.jitter_sigma
    t1 = stats.tau1(state, 1)
    t1h = stats.tau1h(state)
    t1dt = stats.tau1h_dt(state)
    return {
        "pearson": stats.pearson(state),
        "tau1_s": t1,
        "tau2_s": stats.tau1(state, 2),
        "tau1h_s": t1h,
        "tau2h_s": stats.tau2h(state),
        "tau1h_dt_s": t1dt,
        "mean_shift_slope": stats.mean_shift_slope(state),
        "tau1_jit_s": stats.with_jitter(t1, tj, 1),
        "tau1h_jit_s": stats.with_jitter(t1h, tj, 2),
        "tau1h_dt_jit_s": stats.with_jitter(t1dt, tj, 2),
        "l0_m": stats.l_zero(config.source, config.fiber.beta),
    }


def keyrate_row(config: LinkConfig, scenario: Scenario) -> dict:
    row = qkd.key_rate(config, scenario).as_row()
    row.pop("length_m")
    return row


def maxdist_row(config: LinkConfig, scenario: Scenario) -> dict:
    scenario = Scenario.parse(scenario)
    return {"scenario": scenario.value, "max_distance_m": qkd.max_distance(config, scenario)}


def correlation_row(config: LinkConfig) -> dict:
    state = BiphotonState.from_config(config)
    source, beta = config.source, config.fiber.beta
    l095 = stats.l_095(source, beta) if source.rho != 0 else math.nan
    return {"pearson": stats.pearson(state), "l0_m": stats.l_zero(source, beta), "l095_m": l095}


QUANTITIES = {
    "stats": stats_row,
    "correlation": correlation_row,
    "keyrate": keyrate_row,
    "maxdist": maxdist_row,
}
_SCENARIO_QUANTITIES = ("keyrate", "maxdist")


@dataclass(frozen=True)
class SweepSpec:
    axes: tuple[Axis | Levels, ...]
    quantity: str = "stats"
    scenarios: tuple[Scenario, ...] = (Scenario.GLOBAL_REF,)
    fixed: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ConfigError({"quantity": f"must be one of {', '.join(QUANTITIES)}"})
        keys = [k for a in self.axes for k in _expand(a.name)]
        if len(set(keys)) != len(keys):
            raise ConfigError({"axis": "two axes set the same configuration key"})

    def points(self, base: LinkConfig):
        """Lattice points in row-major order of the axes, then scenarios."""
        values = config_to_mapping(base)
        values.update(self.fixed)
        grids = [a.values() for a in self.axes]
        for combo in itertools.product(*grids):
            point = dict(values)
            for a, v in zip(self.axes, combo):
                point.update({key: float(v) for key in _expand(a.name)})
            point["_axes"] = {a.name: float(v) for a, v in zip(self.axes, combo)}
            for sc in self.scenarios if self.quantity in _SCENARIO_QUANTITIES else (None,):
                yield point, sc


def _evaluate(job):
    quantity, point, scenario = job
    point = dict(point)
    row = dict(point.pop("_axes"))
    config = config_from_mapping(point)
    fn = QUANTITIES[quantity]
    row.update(fn(config) if scenario is None else fn(config, scenario))
    return row


def run_sweep(spec: SweepSpec, base: LinkConfig, workers: int = 1) -> list[dict]:
    jobs = [(spec.quantity, p, sc) for p, sc in spec.points(base)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_evaluate, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_evaluate(j) for j in jobs]
