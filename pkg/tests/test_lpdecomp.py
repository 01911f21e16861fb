import numpy as np
import pytest
from hypothesis import given, strategies as st

from holderlab.apply import ensemble_fields
from holderlab.field import Grid
from holderlab.holder import AnisotropyProfile
from holderlab.lpdecomp import (DyadicScaler, LPError, aniso_distance, block_decompose, build_cutoffs,
                                edge_mass_fraction, localized_kernel, moment_integral, partition_residual,
                                smooth_step, theta_kernel, zero_mean_slice_residual)
from holderlab.symbols import constant_symbol, heat_resolvent, heat_time_derivative, riesz_second_order

PROFILES = [
    AnisotropyProfile(0.5, {0: 1.0}, {1: 1.0}),
    AnisotropyProfile(0.5, {0: 1.0}, {1: 4.0}),
    AnisotropyProfile(0.5, {0: 1.0, 1: 1.0, 2: 0.5}, {3: 2.0}),
]


def _shell_samples(profile, count, rng, lo=1 / 8, hi=8.0):
    u = rng.standard_normal((count, profile.dims))
    r = aniso_distance(u, profile)
    target = np.exp(rng.uniform(np.log(lo), np.log(hi), count))
    return u * (target / r)[:, None] ** profile.weights


def test_cutoff_shapes():
    c = build_cutoffs()
    assert c.psi(np.array([0.0, 1.0])).tolist() == [1.0, 1.0]
    assert c.psi(np.array([2.0, 5.0])).tolist() == [0.0, 0.0]
    r = np.linspace(0, 8, 801)
    assert np.all(c.phi(r)[(r < 0.5) | (r > 2)] == 0)
    assert np.all(c.omega(r)[(r >= 0.5) & (r <= 2)] == 1)
    assert np.all(c.omega(r)[(r <= 0.25) | (r >= 4)] == 0)
    assert smooth_step(0.5) == pytest.approx(0.5)
    with pytest.raises(LPError):
        build_cutoffs(0.0)


@pytest.mark.parametrize("profile", PROFILES)
def test_partition_of_unity(profile):
    xi = _shell_samples(profile, 10_000, np.random.default_rng(0))
    assert partition_residual(profile, build_cutoffs(), xi, (-6, 6)) < 1e-12


def test_partition_range_checks():
    xi = np.array([[1.0, 1.0]])
    with pytest.raises(LPError):
        partition_residual(PROFILES[0], build_cutoffs(), xi, (1, 0))
    with pytest.raises(LPError, match="too narrow"):
        partition_residual(PROFILES[0], build_cutoffs(), xi, (1, 3))


@given(st.integers(-6, 6), st.integers(0, 2))
def test_dyadic_scaling(j, which):
    profile = PROFILES[which]
    xi = _shell_samples(profile, 50, np.random.default_rng(j + 10))
    s = DyadicScaler(profile, j)
    np.testing.assert_allclose(aniso_distance(s.apply(xi), profile), 2.0 ** j * aniso_distance(xi, profile),
                               rtol=1e-12)
    np.testing.assert_allclose(s.inverse(s.apply(xi)), xi, rtol=1e-13)
    assert s.determinant == pytest.approx(np.prod(s.factors))


def test_blocks_sum_to_field():
    g = Grid((np.pi, np.pi), (64, 64))
    u = ensemble_fields(g, "holder_bumps", 1, 3)[0]
    blocks = block_decompose(u, PROFILES[1], build_cutoffs())
    total = sum(b.values for b in blocks.values())
    assert np.max(np.abs(total - (u.values - u.values.mean()))) < 1e-12 * u.max_abs()


def test_aniso_distance_example():
    assert aniso_distance([0.0, 0.0, 4.0, 0.0], PROFILES[2]) == pytest.approx(2.0)
    with pytest.raises(LPError):
        aniso_distance([1.0, 2.0, 3.0], PROFILES[0])


KERNEL_GRID = Grid((32 * np.pi, 32 * np.pi), (512, 512))


def test_riesz_kernel_level_independent():
    m, p = riesz_second_order(1, 0, 2), PROFILES[0]
    n0 = localized_kernel(m, 0, KERNEL_GRID, p)
    n3 = localized_kernel(m, 3, KERNEL_GRID, p)
    assert np.max(np.abs(n0.values - n3.values)) < 1e-12 * n0.max_abs()


def test_kernel_moments():
    p = PROFILES[0]
    riesz = localized_kernel(riesz_second_order(1, 0, 2), 0, KERNEL_GRID, p)
    const = localized_kernel(constant_symbol(1.0, 2), 0, KERNEL_GRID, p)
    assert edge_mass_fraction(riesz) < 1e-3
    assert np.isfinite(moment_integral(riesz, p)) and moment_integral(riesz, p) > 0
    assert moment_integral(const, p, edge_tol=0.05) > 0


def test_moment_integral_rejects_truncated_kernel():
    g = Grid((8 * np.pi,) * 3, (128,) * 3)
    p = AnisotropyProfile(0.5, {0: 1.0}, {1: 1.0, 2: 1.0})
    n = localized_kernel(riesz_second_order(1, 0, 3), 0, g, p)
    with pytest.raises(LPError, match="enlarge"):
        moment_integral(n, p)


def test_resolution_check():
    with pytest.raises(LPError):
        localized_kernel(riesz_second_order(1, 0, 2), 0, Grid((np.pi, np.pi), (16, 16)), PROFILES[0])


def test_theta_zero_mean_slices():
    g = Grid((32 * np.pi, 64 * np.pi), (1024, 1024))
    p = AnisotropyProfile(0.5, {1: 1.0}, {0: 2.0})
    theta = theta_kernel(heat_time_derivative(1.0), 0, g, p)
    assert zero_mean_slice_residual(theta, [0]) < 1e-12
    control = theta_kernel(heat_resolvent(1.0), 0, g, p)
    assert zero_mean_slice_residual(control, [0]) > 0.1
