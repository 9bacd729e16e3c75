"""BB84 key-rate model for the source-in-the-middle link with temporal filtering.

Alice holds photon 1, Bob photon 2, and both fibre arms have length L.  Key
rates are secure bits per emitted pair.  No basis-sifting factor is applied.
"""
from __future__ import annotations

import enum
import math
from dataclasses import asdict, dataclass

from scipy import optimize

from . import stats
from .biphoton import BiphotonState
from .model import FiberSpec, LinkConfig, validate

__all__ = [
    "NumericalGuardError",
    "NoSecureDistanceError",
    "Scenario",
    "WindowSet",
    "DarkProbs",
    "KeyRateResult",
    "DARK_PROB_LIMIT",
    "UNBOUNDED",
    "transmittance",
    "windows",
    "dark_prob",
    "dark_probs",
    "p_exp",
    "qber",
    "binary_entropy",
    "qber_threshold",
    "key_rate",
    "max_distance",
]

DARK_PROB_LIMIT = 0.1
# max_distance returns this when no noise is present: K = T^2 > 0 at every L
UNBOUNDED = math.inf


class NumericalGuardError(ValueError):
    """A validity condition of an approximation or a numerical method failed."""


class NoSecureDistanceError(NumericalGuardError):
    """No key can be distilled even at zero distance."""


class Scenario(enum.Enum):
    GLOBAL_REF = "global"
    MUTUAL_REF_ONLY = "mutual"

    @classmethod
    def parse(cls, value: "str | Scenario") -> "Scenario":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"scenario must be 'global' or 'mutual', got {value!r}") from None


@dataclass(frozen=True)
class WindowSet:
    """Window durations in seconds: own (unheralded) windows and coincidence windows."""

    tau1_win: float
    tau2_win: float
    tau1h_win: float
    tau2h_win: float


@dataclass(frozen=True)
class DarkProbs:
    p1: float
    p2: float
    p1h: float
    p2h: float


@dataclass(frozen=True)
class KeyRateResult:
    scenario: Scenario
    length: float
    transmittance: float
    windows: WindowSet
    dark_probs: DarkProbs
    p_exp: float
    qber: float
    key_rate: float

    def as_row(self) -> dict[str, float | str]:
        row: dict[str, float | str] = {
            "scenario": self.scenario.value,
            "length_m": self.length,
            "transmittance": self.transmittance,
        }
        row.update(asdict(self.windows))
        row.update({k.upper(): v for k, v in asdict(self.dark_probs).items()})
        row.update(p_exp=self.p_exp, qber=self.qber, key_rate=self.key_rate)
        return row


def transmittance(fiber: FiberSpec) -> float:
    """Single-arm power transmittance, ``10**(-alpha L / 10)`` with L in km."""
    return 10.0 ** (-fiber.alpha * (fiber.length / 1000.0) / 10.0)


def windows(config: LinkConfig, scenario: Scenario) -> WindowSet:
    scenario = Scenario.parse(scenario)
    state = BiphotonState.from_config(config)
    k = config.window_multiplier
    tj = config.detector.jitter_sigma
    if scenario is Scenario.GLOBAL_REF:
        return WindowSet(
            tau1_win=k * stats.with_jitter(stats.tau1(state, 1), tj, 1),
            tau2_win=k * stats.with_jitter(stats.tau1(state, 2), tj, 1),
            tau1h_win=k * stats.with_jitter(stats.tau1h(state), tj, 2),
            tau2h_win=k * stats.with_jitter(stats.tau2h(state), tj, 2),
        )
    slot = 1.0 / config.detector.repetition_rate
    return WindowSet(
        tau1_win=slot,
        tau2_win=slot,
        tau1h_win=k * stats.with_jitter(stats.tau1h_dt(state), tj, 2),
        tau2h_win=k * stats.with_jitter(stats.tau2h_dt(state), tj, 2),
    )


def dark_prob(dark_rate: float, window: float) -> float:
    """Probability of a dark click at a two-detector station during ``window``."""
    p = 2.0 * dark_rate * window
    if p > DARK_PROB_LIMIT:
        raise NumericalGuardError(
            f"dark-count probability 2*d*tau = {p:.3g} exceeds {DARK_PROB_LIMIT}; "
            "the first-order approximation no longer holds"
        )
    return p


def dark_probs(dark_rate: float, win: WindowSet) -> DarkProbs:
    return DarkProbs(
        p1=dark_prob(dark_rate, win.tau1_win),
        p2=dark_prob(dark_rate, win.tau2_win),
        p1h=dark_prob(dark_rate, win.tau1h_win),
        p2h=dark_prob(dark_rate, win.tau2h_win),
    )


def p_exp(T: float, darks: DarkProbs) -> float:
    """Probability that an emitted pair yields an accepted click pair.

    Both photons detected, or one detected plus a dark click in the partner's
    coincidence window, or two dark clicks.  The last term pairs Alice's own
    window with Bob's coincidence window.
    """
    return T * T + T * (1.0 - T) * (darks.p1h + darks.p2h) + (1.0 - T) ** 2 * darks.p1 * darks.p2h


def qber(p_exp: float, T: float) -> float:
    """Half of all accepted events that involve at least one dark click are errors."""
    if p_exp < T * T:
        raise NumericalGuardError("p_exp < T^2: inconsistent inputs")
    if p_exp == 0:
        return 0.0
    return (p_exp - T * T) / (2.0 * p_exp)


def binary_entropy(q: float) -> float:
    if q <= 0.0 or q >= 1.0:
        return 0.0
    return -q * math.log2(q) - (1.0 - q) * math.log2(1.0 - q)


def qber_threshold() -> float:
    """QBER at which 1 - 2 H(Q) vanishes, about 0.1100."""
    return optimize.brentq(lambda q: 1.0 - 2.0 * binary_entropy(q), 0.01, 0.4, xtol=1e-15)


def key_rate(config: LinkConfig, scenario: Scenario) -> KeyRateResult:
    scenario = Scenario.parse(scenario)
    validate(config)
    T = transmittance(config.fiber)
    win = windows(config, scenario)
    darks = dark_probs(config.detector.dark_rate, win)
    p = p_exp(T, darks)
    q = qber(p, T)
    k = p * max(0.0, 1.0 - 2.0 * binary_entropy(q))
    return KeyRateResult(scenario, config.fiber.length, T, win, darks, p, q, k)


def max_distance(
    config: LinkConfig,
    scenario: Scenario,
    tol: float = 10.0,
    l_max: float = 1e7,
) -> float:
    """Largest fibre length (per arm, metres) with a positive key rate.

    Doubles the length from 1 km until the key rate vanishes, then bisects
    that last bracket down to ``tol``.  Returns :data:`UNBOUNDED` for a noiseless
    link.  The returned length always has K > 0.
    """
    scenario = Scenario.parse(scenario)
    if config.detector.dark_rate == 0:
        return UNBOUNDED

    def k_at(length: float) -> float:
        return key_rate(config.with_length(length), scenario).key_rate

    if not k_at(0.0) > 0:
        raise NoSecureDistanceError("key rate is zero already at L = 0")
    lo, hi = 0.0, 1000.0
    while k_at(hi) > 0:
        lo, hi = hi, 2.0 * hi
        if hi > l_max:
            raise NumericalGuardError(f"key rate still positive at {l_max:g} m")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if k_at(mid) > 0:
            lo = mid
        else:
            hi = mid
    return lo
