"""Closed-form temporal statistics of the propagated photon pair.

All widths are standard deviations of detection-time densities derived from
|psi_L|^2, in seconds.  Photon indices are 1-based.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import optimize

from .biphoton import BiphotonState, f
from .model import SourceSpec

__all__ = [
    "DegenerateCorrelationError",
    "TemporalStats",
    "pearson",
    "l_zero",
    "l_095",
    "tau1",
    "tau1h",
    "tau2h",
    "tau1h_dt",
    "tau2h_dt",
    "mean_shift",
    "mean_shift_slope",
    "with_jitter",
    "temporal_stats",
]


class DegenerateCorrelationError(ValueError):
    """The requested quantity is undefined for this value of rho."""


@dataclass(frozen=True)
class TemporalStats:
    pearson: float
    tau1: float
    tau1h: float
    tau2h: float
    tau1h_dt: float
    mean_shift_slope: float


def _s(state: BiphotonState):
    return state.sigma1, state.sigma2, state.rho


def pearson(state: BiphotonState) -> float:
    """Correlation coefficient of the two detection times."""
    s1, s2, rho = _s(state)
    return -rho * f(-(s1 * s1) * (s2 * s2), state) / math.sqrt(f(s1**4, state) * f(s2**4, state))


def l_zero(source: SourceSpec, beta: float) -> float:
    """Fibre length at which the temporal correlation changes sign."""
    if abs(source.rho) >= 1:
        raise DegenerateCorrelationError("L0 is undefined for |rho| = 1")
    return 1.0 / (2.0 * source.sigma1 * source.sigma2 * abs(beta) * math.sqrt(1.0 - source.rho**2))


def l_095(source: SourceSpec, beta: float, rtol: float = 1e-9) -> float:
    """Smallest length beyond L0 where the temporal correlation reaches 0.95 rho."""
    if source.rho == 0:
        raise DegenerateCorrelationError("the 0.95 rho contour is undefined for rho = 0")
    l0 = l_zero(source, beta)
    target = 0.95 * source.rho

    def resid(length: float) -> float:
        return pearson(BiphotonState(source, beta, length)) - target

    return optimize.bisect(resid, l0, 1e6 * l0, xtol=1e-300, rtol=max(rtol, 4 * 2.2e-16), maxiter=500)


def tau1(state: BiphotonState, which_photon: int = 1) -> float:
    """Unheralded width: standard deviation of the marginal detection-time density."""
    if which_photon not in (1, 2):
        raise ValueError("which_photon must be 1 or 2")
    s = state.sigma1 if which_photon == 1 else state.sigma2
    bl = state.beta * state.length
    return math.sqrt(2.0 * s * s * bl * bl + 1.0 / (2.0 * s * s * (1.0 - state.rho**2)))


def tau1h(state: BiphotonState) -> float:
    """Width of photon 1 given the detection time of photon 2."""
    s1, s2, _ = _s(state)
    bl = state.beta * state.length
    g = f(-(s1 * s1) * (s2 * s2), state)
    num = g * g + 4.0 * bl * bl * (s1 * s1 + s2 * s2) ** 2
    return math.sqrt(num / (2.0 * s1 * s1 * f(s2**4, state)))


def tau2h(state: BiphotonState) -> float:
    return tau1h(state.swapped())


def tau1h_dt(state: BiphotonState) -> float:
    """Width of the time-difference t2 - t1 (heralding without a global clock)."""
    s1, s2, rho = _s(state)
    if abs(rho) >= 1:
        raise DegenerateCorrelationError("time-difference width is undefined for |rho| = 1")
    p = (s1 * s1) * (s2 * s2)
    num = (s1 * s1 + s2 * s2) * f(p, state) + 2.0 * s1 * s2 * rho * f(-p, state)
    return math.sqrt(num / (2.0 * p * (1.0 - rho * rho)))


def tau2h_dt(state: BiphotonState) -> float:
    return tau1h_dt(state.swapped())


def mean_shift_slope(state: BiphotonState) -> float:
    """d<t1>/dT2: how far the expected t1 moves per unit of the heralding time T2."""
    s1, s2, rho = _s(state)
    return -rho * s2 * f(-(s1 * s1) * (s2 * s2), state) / (s1 * f(s2**4, state))


def mean_shift(state: BiphotonState, T2: float) -> float:
    """Expected detection time of photon 1 when photon 2 was detected at ``T2``."""
    return T2 * mean_shift_slope(state)


def with_jitter(width: float, jitter_sigma: float, n_detectors: int) -> float:
    """Add ``n_detectors`` independent Gaussian jitters in quadrature."""
    if n_detectors not in (1, 2):
        raise ValueError("n_detectors must be 1 or 2")
    return math.sqrt(width * width + n_detectors * jitter_sigma * jitter_sigma)


def temporal_stats(state: BiphotonState) -> TemporalStats:
    return TemporalStats(
        pearson=pearson(state),
        tau1=tau1(state, 1),
        tau1h=tau1h(state),
        tau2h=tau2h(state),
        tau1h_dt=tau1h_dt(state),
        mean_shift_slope=mean_shift_slope(state),
    )
