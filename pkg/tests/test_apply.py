import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from holderlab.apply import (apply_multiplier, band_limited_field, ensemble_fields, gain_experiment,
                             holder_bump_field, multiplier_on_grid)
from holderlab.field import FieldError, Grid, SampledField, forward_transform, sample
from holderlab.holder import AnisotropyProfile
from holderlab.symbols import (SymbolError, constant_symbol, heat_resolvent, heat_time_derivative,
                               riesz_second_order)

SMALL = Grid((np.pi, np.pi), (32, 32))
GAIN_GRID = Grid((np.pi, np.pi), (256, 256))
PROFILE = AnisotropyProfile(0.5, {0: 1.0}, {1: 1.0})


@pytest.mark.parametrize("m,dc,policy", [
    (riesz_second_order(1, 0, 2), "auto", "zero"),
    (constant_symbol(2.0, 2), "auto", "symbol_value"),
    (heat_resolvent(1.0), "auto", "ring_average"),
    (heat_resolvent(1.0), "zero", "zero"),
    (heat_resolvent(1.0), 0.5, "fixed:(0.5+0j)"),
])
def test_dc_policies(m, dc, policy):
    vals, got = multiplier_on_grid(m, SMALL, dc)
    assert got == policy
    assert np.all(np.isfinite(vals))


def test_nyquist_bins_are_averaged():
    vals, _ = multiplier_on_grid(riesz_second_order(1, 0, 2), SMALL)
    assert np.all(vals[16, 1:16] == 0) and np.all(vals[1:16, 16] == 0)
    vals, _ = multiplier_on_grid(heat_time_derivative(1.0), SMALL)
    assert np.max(np.abs(vals[:, 16].imag)) < 1e-15


def test_ring_average_value():
    vals, _ = multiplier_on_grid(heat_resolvent(1.0), SMALL, "average")
    ring = [vals[i, j] for i in (-1, 0, 1) for j in (-1, 0, 1) if (i, j) != (0, 0)]
    assert vals[0, 0] == pytest.approx(np.mean(ring))
    assert np.isclose(vals[0, 0].imag, 0.0, atol=1e-15)


def test_dc_policy_errors():
    with pytest.raises(SymbolError, match="valid"):
        multiplier_on_grid(riesz_second_order(1, 0, 2), SMALL, "bogus")
    with pytest.raises(SymbolError):
        multiplier_on_grid(riesz_second_order(1, 0, 3), SMALL)


def test_riesz_on_single_mode():
    # xi_k xi_l / |xi|^2 acts as d_k d_l / Delta: cos x cos 2y -> 2 sin x sin 2y / (-5)
    u = sample(lambda x, y: np.cos(x) * np.cos(2 * y), SMALL)
    v = apply_multiplier(riesz_second_order(1, 0, 2), u)
    x, y = SMALL.mesh()
    assert np.max(np.abs(v.values + 0.4 * np.sin(x) * np.sin(2 * y))) < 1e-13


def test_constant_multiplier_is_scaling():
    u = ensemble_fields(SMALL, "band_limited", 1, 2)[0]
    v, policy = apply_multiplier(constant_symbol(3.0, 2), u, return_policy=True)
    assert policy == "symbol_value"
    np.testing.assert_allclose(v.values, 3 * u.values, atol=1e-12)


def test_apply_requires_physical_side():
    u = forward_transform(SampledField(SMALL, np.ones(SMALL.shape)))
    with pytest.raises(FieldError):
        apply_multiplier(riesz_second_order(1, 0, 2), u)


@given(arrays(np.float64, (32, 32), elements=st.floats(-100, 100)))
def test_hermitian_symbol_keeps_real_fields_real(a):
    v = apply_multiplier(heat_time_derivative(1.0), SampledField(SMALL, a))
    assert np.max(np.abs(v.values.imag)) <= 1e-12 * (1 + np.max(np.abs(a)))


@given(st.floats(-5, 5), st.integers(0, 100))
def test_apply_linear(c, seed):
    f, g = ensemble_fields(SMALL, "band_limited", 2, seed)
    m = riesz_second_order(0, 1, 2)
    lhs = apply_multiplier(m, f + c * g).values
    rhs = apply_multiplier(m, f).values + c * apply_multiplier(m, g).values
    assert np.max(np.abs(lhs - rhs)) < 1e-12 * (1 + abs(c))


def test_ensemble_seeding():
    fields = ensemble_fields(SMALL, "holder_bumps", 3, 10)
    for i, f in enumerate(fields):
        again = holder_bump_field(SMALL, 0.5, (0,), np.random.default_rng(10 + i))
        np.testing.assert_array_equal(f.values, again.values)
    b = band_limited_field(SMALL, np.random.default_rng(0))
    assert b.max_abs() == pytest.approx(1.0)
    with pytest.raises(ValueError, match="valid"):
        ensemble_fields(SMALL, "nope", 1, 0)


def test_bump_fields_jump_on_other_axes():
    u = holder_bump_field(GAIN_GRID, 0.5, (0,), np.random.default_rng(0)).values.real
    jumps_y = np.max(np.abs(np.diff(u, axis=1)))
    jumps_x = np.max(np.abs(np.diff(u, axis=0)))
    assert jumps_y > 5 * jumps_x


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_riesz_gains_regularity(seed):
    u = ensemble_fields(GAIN_GRID, "holder_bumps", 1, seed)[0]
    rep = gain_experiment(riesz_second_order(1, 0, 2), PROFILE, u)
    assert rep.dc_policy == "zero"
    assert rep.output_exponent(1, "gained") >= 0.5 - 0.1
    assert rep.imag_leak < 1e-12


@pytest.mark.parametrize("seed", [0, 1])
def test_constant_symbol_does_not_gain(seed):
    u = ensemble_fields(GAIN_GRID, "holder_bumps", 1, seed)[0]
    rep = gain_experiment(constant_symbol(1.0, 2), PROFILE, u)
    assert rep.output_exponent(1, "gained") < 0.3


def test_gain_report_serialization():
    u = ensemble_fields(Grid((np.pi, np.pi), (64, 64)), "holder_bumps", 1, 0)[0]
    rep = gain_experiment(riesz_second_order(1, 0, 2), PROFILE, u)
    assert set(rep.gain_ratios()) == {"smooth:0", "gained:1"}
    assert rep.max_gain_ratio == max(rep.gain_ratios().values())
    lines = rep.to_csv().split("\r\n")
    assert lines[0].startswith("side,axis,group") and len(lines) == 2 + 1 + 2
    assert '"dc_policy": "zero"' in rep.to_json()
    with pytest.raises(FieldError):
        gain_experiment(riesz_second_order(1, 0, 2), AnisotropyProfile(0.5, {0: 1.0}), u)
