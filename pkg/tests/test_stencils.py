import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fftproj.grid import Grid, build_wavevectors
from fftproj.stencils import (
    SCHEMES,
    DerivativeScheme,
    Stencil,
    least_squares_gradient,
    spectral_gradient,
    stencil_gradient,
    stencil_table,
    symbol,
)

from conftest import FINITE_TAP


def taps(scheme, q, alpha):
    (st_,) = [s for s in stencil_table(scheme) if s.eval_point == q and s.direction == alpha]
    return st_.as_dict()


def test_nb_quad():
    assert [DerivativeScheme(s).nb_quad for s in SCHEMES] == [1, 1, 1, 1, 2, 2]
    with pytest.raises(ValueError):
        DerivativeScheme("spline")


def test_tap_tables():
    assert taps("forward", 0, 0) == {(0, 0): -1.0, (1, 0): 1.0}
    assert taps("least_squares", 0, 0) == {(0, 0): -0.5, (1, 0): 0.5, (0, 1): -0.5, (1, 1): 0.5}
    assert taps("fe_linear", 1, 1) == {(1, 0): -1.0, (1, 1): 1.0}
    assert taps("fe_linear", 0, 0) == taps("forward", 0, 0)
    assert taps("central", 0, 1) == {(0, -1): -0.5, (0, 1): 0.5}


@pytest.mark.parametrize("scheme", ["fourier", "fourier_two_point"])
def test_symbol_only_schemes_have_no_taps(scheme):
    with pytest.raises(ValueError):
        stencil_table(scheme)


def test_stencil_invariants():
    with pytest.raises(ValueError):
        Stencil(0, 0, (((0, 0), 1.0), ((1, 0), 1.0)))
    with pytest.raises(ValueError):
        Stencil(0, 0, (((0, 0), -1.0), ((2, 0), 1.0)))
    for scheme in FINITE_TAP:
        for s in stencil_table(scheme):
            assert abs(sum(s.as_dict().values())) < 1e-15
            assert all(max(abs(i), abs(j)) <= 1 for i, j in s.as_dict())


def test_symbol_examples():
    g = Grid((8, 8), lengths=(8.0, 8.0))
    ny = (np.pi, 0.0)
    assert abs(symbol("central", 0, 0, ny, g)) < 1e-15
    assert np.isclose(symbol("forward", 0, 0, ny, g), -2.0)
    assert np.isclose(symbol("central", 0, 0, (np.pi / 2, 0.0), g), 1j)
    for scheme in SCHEMES:
        for q in range(DerivativeScheme(scheme).nb_quad):
            assert symbol(scheme, 0, q, (0.0, 0.0), g) == 0
    assert np.isclose(symbol("fourier", 1, 0, (0.3, 0.7), g), 0.7j)


def test_symbol_index_errors():
    g = Grid((5, 5))
    with pytest.raises(IndexError):
        symbol("forward", 0, 1, (0.1, 0.1), g)
    with pytest.raises(IndexError):
        symbol("fe_linear", 2, 0, (0.1, 0.1), g)


def test_fourier_two_point_phase_convention():
    g = Grid((7, 7), lengths=(1.0, 2.0))
    k = np.array([1.3, -0.4])
    dx, dy = g.spacing
    shift = (k[0] * dx + k[1] * dy) / 6
    d = DerivativeScheme("fourier_two_point").symbols_at(k, g.spacing)
    assert np.allclose(d[0], 1j * k * np.exp(-1j * shift))
    assert np.allclose(d[1], 1j * k * np.exp(1j * shift))


@pytest.mark.parametrize("shape", [(5, 5), (6, 6)])
@pytest.mark.parametrize("scheme", FINITE_TAP)
def test_symbol_matches_stencil_on_plane_wave(shape, scheme):
    g = Grid(shape, lengths=(1.0, 1.5))
    table = build_wavevectors(g)
    r = g.positions()
    sym = DerivativeScheme(scheme).symbols(g)
    for i in range(shape[0]):
        for j in range(shape[1]):
            wave = np.exp(1j * np.einsum("xya,a->xy", r, table.k[i, j]))
            nodal = np.stack([wave, np.zeros_like(wave)], axis=-1)
            for s in stencil_table(scheme):
                applied = s.apply(nodal, g.spacing)[..., 0]
                amp = applied / wave
                assert np.allclose(amp, sym[i, j, s.eval_point, s.direction], atol=1e-13)


def test_central_lanczos_sigma():
    g = Grid((9, 9), lengths=(2.0, 3.0))
    k = build_wavevectors(g).k
    d = DerivativeScheme("central").symbols(g)[:, :, 0]
    dx = np.asarray(g.spacing)
    kd = k * dx
    sigma = np.where(k != 0, np.sin(kd) / np.where(kd != 0, kd, 1), 1.0)
    assert np.allclose(d, 1j * k * sigma, atol=1e-14)


def test_forward_nyquist_symmetric():
    g = Grid((8, 6))
    sym = DerivativeScheme("forward")
    for ky in build_wavevectors(g).k[0, :, 1]:
        plus = sym.symbols_at(np.array([np.pi / g.spacing[0], ky]), g.spacing)
        minus = sym.symbols_at(np.array([-np.pi / g.spacing[0], ky]), g.spacing)
        assert np.allclose(plus, minus, atol=1e-14)


@pytest.mark.parametrize("shape", [(7, 7), (8, 8), (6, 9)])
def test_fe_linear_identities(shape):
    g = Grid(shape, lengths=(1.0, 1.7))
    fe = DerivativeScheme("fe_linear").symbols(g)
    fd = DerivativeScheme("forward").symbols(g)[:, :, 0]
    ls = DerivativeScheme("least_squares").symbols(g)[:, :, 0]
    assert np.abs(fe[:, :, 0] - fd).max() <= 1e-15 * max(1.0, np.abs(fd).max())
    assert np.abs(fe.mean(axis=2) - ls).max() <= 1e-14 * max(1.0, np.abs(ls).max())


def test_even_grid_safety_flags():
    even = Grid((8, 8))
    odd = Grid((7, 7))
    safe = {s: DerivativeScheme(s).even_grid_safe(even) for s in SCHEMES}
    assert safe == {
        "fourier": False, "central": False, "forward": True,
        "least_squares": True, "fe_linear": True, "fourier_two_point": False,
    }
    assert all(DerivativeScheme(s).even_grid_safe(odd) for s in SCHEMES)


def test_least_squares_gradient_examples():
    g = Grid((4, 4), lengths=(4.0, 4.0))
    r = np.array([[[0.0, 0.0], [0.0, 1.0]], [[1.0, 0.0], [1.0, 1.0]]])
    A = np.array([[1.2, 0.3], [-0.1, 0.9]])
    assert np.allclose(least_squares_gradient(r @ A.T, g), A)
    c = np.zeros((2, 2, 2))
    c[1, 1] = [0.2, 0.0]
    assert np.allclose(least_squares_gradient(c, g), [[0.1, 0.1], [0.0, 0.0]])
    assert np.allclose(least_squares_gradient(c + 5.0, g), least_squares_gradient(c, g))


def test_least_squares_gradient_is_residual_minimizer(rng):
    # brute force: minimize sum |chi_kl - F r_kl - psi|^2 over F and psi
    g = Grid((4, 4), lengths=(4.0, 4.0))
    c = rng.standard_normal((2, 2, 2))
    rows = []
    rhs = []
    for k in range(2):
        for l in range(2):
            for i in range(2):
                row = np.zeros(6)
                row[2 * i : 2 * i + 2] = [k, l]
                row[4 + i] = 1
                rows.append(row)
                rhs.append(c[k, l, i])
    sol = np.linalg.lstsq(np.array(rows), np.array(rhs), rcond=None)[0]
    assert np.allclose(least_squares_gradient(c, g), sol[:4].reshape(2, 2))


@settings(deadline=None, max_examples=20)
@given(st.sampled_from(FINITE_TAP), st.integers(3, 8), st.integers(3, 8), st.integers(0, 2**32 - 1))
def test_stencil_and_spectral_gradients_agree(scheme, nx, ny, seed):
    g = Grid((nx, ny), lengths=(1.0, 0.8))
    nodal = np.random.default_rng(seed).standard_normal((nx, ny, 2))
    a = stencil_gradient(scheme, nodal, g)
    b = spectral_gradient(scheme, nodal, g)
    assert np.abs(b.imag).max() < 1e-12
    assert np.allclose(a, b.real, atol=1e-12)


def test_affine_displacement_has_constant_gradient():
    g = Grid((6, 6))
    # periodic part only: the gradient of a constant field is zero
    nodal = np.ones((6, 6, 2))
    for scheme in FINITE_TAP:
        assert np.abs(stencil_gradient(scheme, nodal, g)).max() == 0
