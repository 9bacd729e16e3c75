import numpy as np
import pytest
from scipy import integrate

from dispqkd.biphoton import (
    BiphotonState,
    ComplexGrid,
    evaluate_grid,
    f,
    spectral_amplitude,
    temporal_amplitude,
    time_axes,
)
from dispqkd.model import SourceSpec

SIGMA, BETA = 1.57e12, -1.15e-26


def _norm(state, n=401, span=9.0):
    t1, t2 = time_axes(state, n=n, span=span)
    return evaluate_grid(state, t1, t2).total_probability()


@pytest.mark.parametrize("rho", [-0.9, 0.0, 0.5, 0.9])
def test_spectral_amplitude_normalised(rho):
    src = SourceSpec(SIGMA, 0.7 * SIGMA, rho)
    nu = np.linspace(-12, 12, 801) * SIGMA
    phi = spectral_amplitude(src, nu[:, None], nu[None, :])
    total = integrate.trapezoid(integrate.trapezoid(phi**2, nu, axis=1), nu)
    assert total == pytest.approx(1.0, rel=1e-9)


def test_spectral_amplitude_correlation_sign():
    src = SourceSpec(SIGMA, SIGMA, 0.9)
    assert spectral_amplitude(src, SIGMA, SIGMA) > spectral_amplitude(src, SIGMA, -SIGMA)


def test_f_at_zero_length_is_one():
    state = BiphotonState(SourceSpec(SIGMA, SIGMA, 0.3), BETA, 0.0)
    assert f(123.0, state) == 1.0


@pytest.mark.parametrize("length", [0.0, 10.0, 40.47, 1e3, 1e4])
@pytest.mark.parametrize("rho", [-0.9, 0.0, 0.9])
def test_temporal_amplitude_normalised(length, rho):
    state = BiphotonState(SourceSpec(SIGMA, 0.8 * SIGMA, rho), BETA, length)
    assert _norm(state) == pytest.approx(1.0, rel=1e-9)


def test_zero_length_is_real_positive_and_matches_closed_gaussian():
    src = SourceSpec(SIGMA, SIGMA, 0.9)
    state = BiphotonState(src, BETA, 0.0)
    t = np.linspace(-3e-12, 3e-12, 7)
    psi = temporal_amplitude(state, t[:, None], t[None, :])
    assert np.allclose(psi.imag, 0.0)
    assert np.all(psi.real > 0)
    # Fourier pair of the spectral Gaussian: the temporal correlation is -rho
    s, r = SIGMA, 0.9
    ref = s / np.sqrt(np.pi) * (1 - r * r) ** 0.25 * np.exp(
        -0.5 * ((s * t[:, None]) ** 2 + (s * t[None, :]) ** 2 + 2 * r * s * s * t[:, None] * t[None, :])
    )
    assert np.allclose(psi.real, ref, rtol=1e-12)


def test_temporal_amplitude_broadcasts():
    state = BiphotonState(SourceSpec(SIGMA, SIGMA, 0.2), BETA, 100.0)
    assert temporal_amplitude(state, np.zeros(5), 0.0).shape == (5,)
    assert temporal_amplitude(state, np.zeros((3, 1)), np.zeros(4)).shape == (3, 4)


def test_swap_symmetry():
    state = BiphotonState(SourceSpec(SIGMA, 0.6 * SIGMA, 0.4), BETA, 250.0)
    t1, t2 = 1.1e-12, -0.4e-12
    assert temporal_amplitude(state, t1, t2) == pytest.approx(temporal_amplitude(state.swapped(), t2, t1))


def test_state_helpers():
    state = BiphotonState(SourceSpec(1.0, 2.0, 0.1), BETA, 5.0)
    assert state.at(7).length == 7.0
    assert (state.sigma1, state.sigma2, state.rho) == (1.0, 2.0, 0.1)


def test_grid_validation():
    with pytest.raises(ValueError):
        ComplexGrid(np.array([0.0, 1.0, 3.0]), np.arange(3.0), np.zeros((3, 3), complex))
    with pytest.raises(ValueError):
        ComplexGrid(np.arange(3.0), np.arange(3.0), np.zeros((2, 3), complex))
    with pytest.raises(ValueError):
        ComplexGrid(np.arange(3.0)[::-1], np.arange(3.0), np.zeros((3, 3), complex))


def test_grid_csv_and_npz(tmp_path):
    state = BiphotonState(SourceSpec(SIGMA, SIGMA, 0.9), BETA, 41.0)
    t1, t2 = time_axes(state, n=4)
    grid = evaluate_grid(state, t1, t2)
    grid.to_csv(tmp_path / "g.csv")
    lines = (tmp_path / "g.csv").read_text().splitlines()
    assert lines[0] == "t1,t2,re,im,abs,phase"
    assert len(lines) == 17
    row = [float(x) for x in lines[6].split(",")]
    v = grid.values[1, 1]
    assert row[2] == pytest.approx(v.real, rel=1e-8)
    assert row[4] == pytest.approx(abs(v), rel=1e-8)
    grid.save_npz(tmp_path / "g.npz")
    back = ComplexGrid.load_npz(tmp_path / "g.npz")
    assert np.array_equal(back.values, grid.values)
    assert np.array_equal(back.t1_axis, grid.t1_axis)
