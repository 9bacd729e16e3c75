"""Closed-form biphoton wave functions before and after dispersive propagation.

Conventions: detunings ``nu`` are angular frequencies measured from the
central frequency, times are measured in the frame co-moving with the
wavepackets.  The time-domain amplitude is

    psi(t1, t2) = (1 / 2pi) * integral phi(nu1, nu2) exp(-i (nu1 t1 + nu2 t2)) dnu1 dnu2

and a fibre of length L multiplies each photon's spectrum by
``exp(-i beta L nu**2)``.  This is the spectral form of the time-domain
kernel ``exp(i (t - t')**2 / (4 beta L)) / sqrt(4 pi i beta L)``.  Because
the joint spectrum is even, the sign in the Fourier exponent does not affect
the result.  The sign of the dispersion phase does, and only this choice
reproduces :func:`temporal_amplitude`.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import FiberSpec, LinkConfig, SourceSpec

__all__ = [
    "BiphotonState",
    "ComplexGrid",
    "spectral_amplitude",
    "f",
    "temporal_amplitude",
    "evaluate_grid",
    "time_axes",
    "GRID_CSV_HEADER",
]

GRID_CSV_HEADER = ("t1", "t2", "re", "im", "abs", "phase")


@dataclass(frozen=True)
class BiphotonState:
    """Two-photon state at distance ``length`` along both fibre arms."""

    source: SourceSpec
    beta: float
    length: float

    @classmethod
    def from_config(cls, config: LinkConfig, length: float | None = None) -> "BiphotonState":
        fiber: FiberSpec = config.fiber
        return cls(config.source, fiber.beta, fiber.length if length is None else float(length))

    @property
    def sigma1(self) -> float:
        return self.source.sigma1

    @property
    def sigma2(self) -> float:
        return self.source.sigma2

    @property
    def rho(self) -> float:
        return self.source.rho

    def at(self, length: float) -> "BiphotonState":
        return BiphotonState(self.source, self.beta, float(length))

    def swapped(self) -> "BiphotonState":
        return BiphotonState(self.source.swapped(), self.beta, self.length)


def spectral_amplitude(source: SourceSpec, nu1, nu2):
    """Joint spectral amplitude, a normalised bivariate Gaussian in the detunings."""
    s1, s2, rho = source.sigma1, source.sigma2, source.rho
    nu1 = np.asarray(nu1, dtype=float)
    nu2 = np.asarray(nu2, dtype=float)
    one_m = 1.0 - rho * rho
    norm = 1.0 / (np.sqrt(np.pi) * np.sqrt(s1 * s2 * np.sqrt(one_m)))
    quad = (nu1 / s1) ** 2 + (nu2 / s2) ** 2 - 2.0 * rho * nu1 * nu2 / (s1 * s2)
    return norm * np.exp(-quad / (2.0 * one_m))


def f(x, state: BiphotonState):
    """Helper polynomial ``1 + 4 x beta^2 L^2 (1 - rho^2)`` shared by all width formulas."""
    bl = state.beta * state.length
    return 1.0 + 4.0 * x * bl * bl * (1.0 - state.rho * state.rho)


def temporal_amplitude(state: BiphotonState, t1, t2):
    """Propagated two-photon amplitude psi_L(t1, t2); broadcasts over array inputs.

    The complex prefactor uses the principal square-root branch, so the
    result is fixed up to one global phase.  At L = 0 it is real and positive.
    """
    s1, s2, rho = state.sigma1, state.sigma2, state.rho
    bl = state.beta * state.length
    t1 = np.asarray(t1, dtype=float)
    t2 = np.asarray(t2, dtype=float)
    one_m = 1.0 - rho * rho
    g = f(-(s1 * s1) * (s2 * s2), state)
    denom = g + 2j * bl * (s1 * s1 + s2 * s2)
    pref = 1j * np.sqrt(s1 * s2) * one_m**0.25 / np.sqrt(-np.pi * denom + 0j)
    num = (
        2j * (s1 * s1) * (s2 * s2) * bl * one_m * (t1 * t1 + t2 * t2)
        + (s1 * t1) ** 2
        + (s2 * t2) ** 2
        + 2.0 * s1 * s2 * rho * t1 * t2
    )
    return pref * np.exp(-num / (2.0 * denom))


@dataclass(frozen=True, eq=False)
class ComplexGrid:
    """Complex amplitudes sampled on a uniform (t1, t2) lattice, ``values[i, j]`` at (t1[i], t2[j])."""

    t1_axis: np.ndarray
    t2_axis: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        _check_axis(self.t1_axis, "t1_axis")
        _check_axis(self.t2_axis, "t2_axis")
        if self.values.shape != (self.t1_axis.size, self.t2_axis.size):
            raise ValueError(
                f"values shape {self.values.shape} does not match axes "
                f"({self.t1_axis.size}, {self.t2_axis.size})"
            )

    @property
    def dt1(self) -> float:
        return float(self.t1_axis[1] - self.t1_axis[0])

    @property
    def dt2(self) -> float:
        return float(self.t2_axis[1] - self.t2_axis[0])

    @property
    def amplitude(self) -> np.ndarray:
        return np.abs(self.values)

    @property
    def phase(self) -> np.ndarray:
        return np.angle(self.values)

    @property
    def probability(self) -> np.ndarray:
        return np.abs(self.values) ** 2

    def total_probability(self) -> float:
        return float(self.probability.sum() * self.dt1 * self.dt2)

    def to_csv(self, path) -> None:
        """One row per lattice point, t1-major, 9 significant digits.

        ``path`` may also be an open text stream.
        """
        if hasattr(path, "write"):
            self._write_csv(path)
        else:
            with open(path, "w", newline="") as fh:
                self._write_csv(fh)

    def _write_csv(self, fh) -> None:
        amp, ph = self.amplitude, self.phase
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(GRID_CSV_HEADER)
        for i, t1 in enumerate(self.t1_axis):
            for j, t2 in enumerate(self.t2_axis):
                v = self.values[i, j]
                w.writerow([f"{x:.8e}" for x in (t1, t2, v.real, v.imag, amp[i, j], ph[i, j])])

    def save_npz(self, path: str | Path) -> None:
        """Binary export: ``t1_axis``, ``t2_axis`` (float64) and ``values`` (complex128)."""
        np.savez(path, t1_axis=self.t1_axis, t2_axis=self.t2_axis, values=self.values)

    @classmethod
    def load_npz(cls, path: str | Path) -> "ComplexGrid":
        with np.load(path) as data:
            return cls(data["t1_axis"], data["t2_axis"], data["values"])


def _check_axis(axis: np.ndarray, name: str) -> None:
    if axis.ndim != 1 or axis.size < 2:
        raise ValueError(f"{name} must be 1-D with at least 2 points")
    step = np.diff(axis)
    if not np.all(step > 0):
        raise ValueError(f"{name} must be strictly increasing")
    if not np.allclose(step, step[0], rtol=1e-9, atol=0):
        raise ValueError(f"{name} must be uniformly spaced")


def evaluate_grid(state: BiphotonState, t1_axis, t2_axis) -> ComplexGrid:
    t1_axis = np.asarray(t1_axis, dtype=float)
    t2_axis = np.asarray(t2_axis, dtype=float)
    _check_axis(t1_axis, "t1_axis")
    _check_axis(t2_axis, "t2_axis")
    values = temporal_amplitude(state, t1_axis[:, None], t2_axis[None, :])
    return ComplexGrid(t1_axis, t2_axis, values)


def time_axes(state: BiphotonState, n: int = 512, span: float = 6.0) -> tuple[np.ndarray, np.ndarray]:
    """Symmetric axes covering +-``span`` marginal standard deviations of each photon."""
    from .stats import tau1

    return (
        np.linspace(-span, span, n) * tau1(state, 1),
        np.linspace(-span, span, n) * tau1(state, 2),
    )
