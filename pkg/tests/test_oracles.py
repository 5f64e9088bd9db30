import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fftproj.grid import Grid
from fftproj.materials import Phase, PhaseMap, hooke_stress, lame
from fftproj.oracles import (
    EshelbyProblem,
    eshelby_field,
    eshelby_periodic,
    fem_direct_solve,
    ringing_score,
    voxel_average,
    voxel_ringing_score,
)
from fftproj.oracles.eshelby import eshelby_displacement

HARD, SOFT = Phase("hard", 1.0, 0.33), Phase("soft", 0.1, 0.33)
SHEAR = np.array([[0.01, 0.004], [0.004, -0.002]])


def problem(strain=0.01 * np.eye(2), E_inc=0.1, images=5, radius=0.1):
    return EshelbyProblem((radius, radius), 1.0, 0.33, E_inc, 0.33, strain=strain, images=images)


# -- FEM ---------------------------------------------------------------------------------


def test_fem_homogeneous():
    g = Grid((5, 5))
    e_bar = np.array([[0.01, 0.002], [0.002, -0.003]])
    sol = fem_direct_solve(g, PhaseMap(np.ones((5, 5), int), [HARD, SOFT]), e_bar)
    assert np.abs(sol.displacement).max() <= 1e-14
    assert np.abs(sol.strain - e_bar).max() <= 1e-14


def test_fem_checker_point_symmetry():
    g = Grid((2, 2))
    ids = np.array([[0, 1], [1, 0]])
    e_bar = np.array([[0.01, 0.003], [0.003, 0.002]])
    sol = fem_direct_solve(g, PhaseMap(ids, [HARD, SOFT]), e_bar)
    # rotating by 180 degrees maps voxel (I, J) to (-I-1, -J-1) and swaps the two triangles
    rotated = sol.strain[::-1, ::-1, ::-1]
    assert np.abs(rotated - sol.strain).max() <= 1e-10 * np.abs(e_bar).max()


@pytest.mark.parametrize("seed", range(3))
def test_fem_stress_is_balanced(seed):
    # every interior edge carries equal and opposite tractions: check global mean stress
    g = Grid((6, 5))
    rng = np.random.default_rng(seed)
    phases = PhaseMap(rng.integers(0, 2, (6, 5)), [HARD, SOFT])
    e_bar = np.array([[0.01, 0.0], [0.0, 0.0]])
    sol = fem_direct_solve(g, phases, e_bar)
    assert np.abs(sol.strain.mean(axis=(0, 1, 2)) - e_bar).max() <= 1e-14
    lam, mu = phases.lame_fields(2)
    assert np.allclose(hooke_stress(sol.strain, lam, mu), sol.stress)


# -- Eshelby -----------------------------------------------------------------------------


def test_interior_uniform(rng):
    prob = problem()
    r = 0.1 * np.sqrt(rng.uniform(0, 1, 50))
    t = rng.uniform(0, 2 * np.pi, 50)
    x = np.stack([r * np.cos(t), r * np.sin(t)], -1)
    vals = eshelby_field(prob, x)
    assert np.abs(vals - vals[0]).max() <= 1e-12 * np.abs(vals[0]).max()
    assert np.allclose(vals[0], prob.interior_strain())


@pytest.mark.parametrize("strain", [0.01 * np.eye(2), SHEAR])
def test_equal_moduli_gives_remote_strain(strain, rng):
    prob = problem(strain, E_inc=1.0)
    x = rng.uniform(-0.5, 0.5, (100, 2))
    assert np.abs(eshelby_field(prob, x) - strain).max() <= 1e-15


def test_far_field_decays_to_remote():
    prob = problem(SHEAR)
    far = eshelby_field(prob, np.array([[1e3, 2e3]]))[0]
    assert np.abs(far - SHEAR).max() <= 1e-10


def test_boundary_uses_exterior_branch():
    prob = problem()
    on = eshelby_field(prob, np.array([[0.1, 0.0]]))[0]
    just_out = eshelby_field(prob, np.array([[0.1 + 1e-12, 0.0]]))[0]
    assert np.allclose(on, just_out, atol=1e-12)
    assert not np.allclose(on, prob.interior_strain())


@pytest.mark.parametrize("strain", [0.01 * np.eye(2), SHEAR])
def test_strain_is_gradient_of_displacement(strain, rng):
    prob = problem(strain)
    h = 1e-6
    for _ in range(20):
        x = rng.uniform(-0.4, 0.4, 2)
        if abs(np.hypot(*x) - 0.1) < 1e-3:
            continue
        grad = np.stack([
            (eshelby_displacement(prob, x + h * e) - eshelby_displacement(prob, x - h * e)) / (2 * h)
            for e in np.eye(2)
        ], axis=-1)
        assert np.allclose(0.5 * (grad + grad.T), eshelby_field(prob, x), atol=1e-8)


def test_displacement_continuous_across_interface(rng):
    prob = problem(SHEAR)
    t = rng.uniform(0, 2 * np.pi, 20)
    n = np.stack([np.cos(t), np.sin(t)], -1)
    inner = eshelby_displacement(prob, (0.1 - 1e-10) * n)
    outer = eshelby_displacement(prob, (0.1 + 1e-10) * n)
    assert np.abs(inner - outer).max() <= 1e-10


def test_traction_continuous_across_interface(rng):
    prob = problem(SHEAR)
    lam1, mu1 = lame(1.0, 0.33)
    lam2, mu2 = lame(0.1, 0.33)
    for t in rng.uniform(0, 2 * np.pi, 20):
        n = np.array([np.cos(t), np.sin(t)])
        s_in = hooke_stress(eshelby_field(prob, (0.1 - 1e-12) * n), lam2, mu2)
        s_out = hooke_stress(eshelby_field(prob, (0.1 + 1e-12) * n), lam1, mu1)
        assert np.allclose(s_in @ n, s_out @ n, atol=1e-10)


def test_non_circular_rejected():
    with pytest.raises(NotImplementedError):
        EshelbyProblem((0.1, 0.2), 1.0, 0.33, 0.1, 0.33)
    with pytest.raises(ValueError):
        EshelbyProblem((0.0, 0.0), 1.0, 0.33, 0.1, 0.33)
    with pytest.raises(ValueError):
        EshelbyProblem((0.1, 0.1), 1.0, 0.33, 0.1, 0.33, strain=[[0, 1], [0, 0]])


def test_periodic_m0_is_single_field():
    g = Grid((31, 31))
    prob = problem(SHEAR)
    ref = eshelby_periodic(prob, g, images=0)
    centers = g.centers() - g.centers()[15, 15]
    assert np.abs(ref.strain - eshelby_field(prob, centers)).max() <= 1e-15


@pytest.mark.parametrize("strain", [0.01 * np.eye(2), np.diag([0.01, -0.004])])
def test_periodic_mirror_symmetries(strain):
    g = Grid((41, 41))
    f = eshelby_periodic(problem(strain), g).strain
    scale = np.abs(f).max()
    sign = np.array([[1, -1], [-1, 1]])
    # voxel centers are symmetric about the center voxel: reflect I -> 2c - I
    assert np.abs(f[::-1] * sign - f).max() <= 1e-10 * scale
    assert np.abs(f[:, ::-1] * sign - f).max() <= 1e-10 * scale


def test_periodic_image_sum_converges():
    g = Grid((41, 41))
    prob = problem(SHEAR)
    means = [eshelby_periodic(prob, g, images=m).inclusion_mean for m in range(7)]
    fields = [eshelby_periodic(prob, g, images=m).strain for m in range(2, 7)]
    steps = [np.abs(b - a).max() for a, b in zip(fields, fields[1:])]
    assert all(b < a for a, b in zip(steps, steps[1:]))
    rel = np.linalg.norm(means[5] - means[4]) / np.linalg.norm(means[5])
    assert rel < 1e-4


@pytest.mark.slow
def test_interior_matches_fine_fem():
    n = 301
    g = Grid((n, n))
    ref = eshelby_periodic(problem(), g)
    phases = PhaseMap(ref.inclusion.astype(int), [HARD, SOFT])
    sol = fem_direct_solve(g, phases, ref.load_strain)
    num = sol.strain[ref.inclusion].mean(axis=(0, 1))
    err = np.linalg.norm(num - problem().interior_strain()) / np.linalg.norm(num)
    assert err < 0.01


# -- ringing -----------------------------------------------------------------------------


@pytest.mark.parametrize("shape", [(8, 8), (16, 12)])
def test_checkerboard_scores_one(shape):
    g = Grid(shape)
    i, j = np.indices(shape)
    assert np.isclose(ringing_score((-1.0) ** (i + j), g), 1.0)


@pytest.mark.parametrize("shape", [(8, 8), (17, 17), (9, 14)])
def test_lowest_sinusoid_scores_zero(shape):
    g = Grid(shape)
    i, j = np.indices(shape)
    assert ringing_score(np.sin(2 * np.pi * i / shape[0]) + np.cos(2 * np.pi * j / shape[1]), g) < 1e-25


def test_constant_field_scores_zero():
    g = Grid((9, 9))
    assert ringing_score(np.full((9, 9), 3.0), g) == 0.0


@settings(deadline=None, max_examples=50)
@given(st.integers(0, 2**32 - 1), st.floats(-1e3, 1e3), st.floats(1e-3, 1e3))
def test_ringing_invariances(seed, shift, scale):
    g = Grid((11, 10))
    v = np.random.default_rng(seed).standard_normal((11, 10))
    s = ringing_score(v, g)
    assert 0 <= s <= 1
    assert np.isclose(ringing_score(scale * v + shift, g), s, rtol=1e-9, atol=1e-12)


def test_ringing_shape_checked():
    with pytest.raises(ValueError):
        ringing_score(np.zeros((3, 3, 2)), Grid((3, 3)))


def test_voxel_average():
    v = np.arange(8.0).reshape(2, 2, 2)
    assert np.array_equal(voxel_average(v), v.mean(axis=2))
    assert np.array_equal(voxel_average(v[..., 0]), v[..., 0])
    i, j = np.indices((8, 8))
    pattern = np.stack([(-1.0) ** (i + j), -(-1.0) ** (i + j)], axis=2) + np.sin(2 * np.pi * i / 8)[..., None]
    # opposite sub-voxel values cancel in the voxel integral
    assert voxel_ringing_score(pattern, Grid((8, 8))) < 1e-25
