import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from holderlab.field import FieldError, Grid, SampledField, sample
from holderlab.holder import (AnisotropyProfile, aniso_norm, difference_sup, fit_exponent, parabolic_norm,
                              partial_seminorm, step_ladder)

POWER_GRID = Grid((4.0,), (512,))


@pytest.mark.parametrize("gamma", [0.3, 0.5, 0.8])
def test_power_law_seminorm(gamma):
    # sup |x+h|^g - |x|^g over x is attained at x = -h/2 ... h^g (symmetric pair): seminorm 1
    u = sample(lambda x: np.abs(x) ** gamma, POWER_GRID)
    assert abs(partial_seminorm(u, 0, gamma, 1, periodic=False) - 1.0) < 0.02
    assert abs(fit_exponent(u, 0, 1, periodic=False) - gamma) < 0.03


def test_lipschitz_sine():
    # sup |sin(x+h) - sin x| = 2 sin(h/2) <= h; the ratio tends to 1 as h -> 0
    g = Grid((np.pi,), (256,))
    u = sample(np.sin, g)
    assert partial_seminorm(u, 0, 0.999, 1) == pytest.approx(1.0, abs=0.01)
    assert fit_exponent(u, 0, 1, (g.spacing[0], 8 * g.spacing[0])) == pytest.approx(1.0, abs=0.01)


def test_second_difference_exponent():
    u = sample(lambda x: np.abs(x) ** 1.5, POWER_GRID)
    assert fit_exponent(u, 0, 2, periodic=False) == pytest.approx(1.5, abs=0.03)


def test_flat_field_has_no_exponent():
    u = SampledField(Grid((1.0,), (64,)), np.full(64, 3.0))
    assert fit_exponent(u, 0) is None
    assert partial_seminorm(u, 0, 0.5) == 0.0


def test_step_ladder():
    np.testing.assert_array_equal(step_ladder(0.1, 0.8, 0.1), [1, 2, 4, 8])
    np.testing.assert_array_equal(step_ladder(0.3, 1.0, 0.1), [3, 6])


def test_difference_sup_nonperiodic_drops_wrap():
    u = SampledField(Grid((1.0,), (8,)), np.arange(8.0))
    assert difference_sup(u, 0, 1, [1], periodic=False)[0] == 1.0
    assert difference_sup(u, 0, 1, [1], periodic=True)[0] == 7.0
    assert difference_sup(u, 0, 2, [1], periodic=False)[0] == 0.0


@pytest.mark.parametrize("l,k", [(0.5, 0), (1.0, 1), (-0.2, 1)])
def test_seminorm_rejects_bad_orders(l, k):
    u = SampledField(Grid((1.0,), (16,)), np.zeros(16))
    with pytest.raises(FieldError):
        partial_seminorm(u, 0, l, k)


def test_fit_exponent_range_checks():
    u = SampledField(Grid((1.0,), (16,)), np.arange(16.0))
    with pytest.raises(FieldError):
        fit_exponent(u, 0, 1, (0.01, 0.5))
    with pytest.raises(FieldError, match="fewer than 4"):
        fit_exponent(u, 0, 1, (0.125, 0.25))


@pytest.mark.parametrize("smooth,gained", [
    ({0: 1.5}, {1: 1.0}),
    ({0: 1.0}, {0: 1.0}),
    ({0: 1.0}, {2: 1.0}),
    ({0: 1.0}, {1: 0.0}),
])
def test_profile_validation(smooth, gained):
    with pytest.raises(ValueError):
        AnisotropyProfile(0.5, smooth, gained)


def test_profile_properties():
    p = AnisotropyProfile(0.5, {1: 0.5, 0: 1.0}, [(2, 4.0)])
    assert p.dims == 3
    np.testing.assert_allclose(p.exponents, [1.0, 0.5, 4.0])
    np.testing.assert_allclose(p.weights, [1.0, 2.0, 0.25])
    np.testing.assert_allclose(p.target_exponents(), [0.5, 0.25, 2.0])
    assert p.smooth_axes == (0, 1) and p.gained_axes == (2,)
    with pytest.raises(ValueError):
        AnisotropyProfile(1.0, {0: 1.0})


def test_aniso_norm_report():
    g = Grid((np.pi, np.pi), (64, 64))
    u = sample(lambda x, y: np.sin(x) * np.cos(y), g)
    rep = aniso_norm(u, None, [0.5, 0.5])
    assert rep.sup_norm == pytest.approx(1.0)
    assert len(rep.per_axis) == 2
    assert rep.c_norm == pytest.approx(rep.sup_norm + rep.seminorm_sum)
    text = rep.to_csv()
    assert text.startswith("axis,l,k,value") and text.endswith("\r\n")


def test_parabolic_norm_structure():
    g = Grid((np.pi, np.pi), (32, 32))
    u = sample(lambda x, t: np.sin(x) * np.sin(t), g)
    rep = parabolic_norm(u, 1, 2.5, 0.625)
    # D_x^2 on the spatial axis plus the time difference of u itself
    assert [e.label for e in rep.per_axis] == ["D[2, 0]", "D[0, 0]"]
    with pytest.raises(FieldError):
        parabolic_norm(u, 1, 2.0, 0.5)


@given(st.floats(-50, 50).filter(lambda c: abs(c) > 1e-3), st.integers(0, 63))
def test_seminorm_scaling_and_translation(c, shift):
    g = Grid((np.pi,), (64,))
    rng = np.random.default_rng(11)
    vals = rng.standard_normal(64)
    base = partial_seminorm(SampledField(g, vals), 0, 0.4)
    assert partial_seminorm(SampledField(g, c * vals), 0, 0.4) == pytest.approx(abs(c) * base, rel=1e-12)
    assert partial_seminorm(SampledField(g, np.roll(vals, shift)), 0, 0.4) == pytest.approx(base, rel=1e-12)


@given(st.floats(0.1, 0.9))
def test_seminorm_monotone_in_order(l):
    # (m dx)^l grows with l when m dx > 1 and shrinks below; on a box with dx < 1 the
    # smallest step dominates, so higher orders never give a smaller value there
    g = Grid((0.5,), (64,))
    u = SampledField(g, np.random.default_rng(2).standard_normal(64))
    assert partial_seminorm(u, 0, min(l + 0.05, 0.99)) >= partial_seminorm(u, 0, l) * (1 - 1e-12)
