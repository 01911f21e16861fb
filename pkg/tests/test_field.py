import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from holderlab.field import (FieldError, Grid, SampledField, Side, forward_transform, inverse_transform,
                             load_field, sample, save_field, spectral_derivative)


@pytest.mark.parametrize("extent,points", [((1.0,), (16,)), ((2.0, 3.0), (8, 12)), ((1.0, 1.0, 0.5), (8, 4, 6))])
def test_roundtrip(extent, points):
    g = Grid(extent, points)
    rng = np.random.default_rng(3)
    u = SampledField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    back = inverse_transform(forward_transform(u))
    assert np.max(np.abs(back.values - u.values)) < 1e-12


def test_nodes_and_frequencies():
    g = Grid((2.0,), (8,))
    np.testing.assert_allclose(g.nodes(0), -2.0 + 0.5 * np.arange(8))
    np.testing.assert_allclose(g.frequencies(0), np.pi / 2.0 * np.fft.fftfreq(8, 1 / 8))


@pytest.mark.parametrize("dims", [1, 2])
def test_gaussian_spectrum(dims):
    # closed form: int exp(-|x|^2/2) e^{-i x xi} dx = (2 pi)^{N/2} exp(-|xi|^2/2)
    g = Grid((12.0,) * dims, (128,) * dims)
    u = sample(lambda *x: np.exp(-sum(c ** 2 for c in x) / 2), g)
    spec = forward_transform(u).values
    xi2 = sum(k ** 2 for k in g.frequency_mesh())
    exact = (2 * np.pi) ** (dims / 2) * np.exp(-xi2 / 2)
    assert np.max(np.abs(spec - exact)) / np.max(exact) < 1e-8


def test_shifted_gaussian_phase():
    g = Grid((12.0,), (128,))
    u = sample(lambda x: np.exp(-(x - 1.5) ** 2 / 2), g)
    xi = g.frequencies(0)
    exact = np.sqrt(2 * np.pi) * np.exp(-xi ** 2 / 2 - 1.5j * xi)
    assert np.max(np.abs(forward_transform(u).values - exact)) < 1e-10


def test_parseval():
    g = Grid((1.5, 2.5), (24, 40))
    rng = np.random.default_rng(1)
    u = SampledField(g, rng.standard_normal(g.shape))
    a, b = u.l2_norm(), forward_transform(u).l2_norm()
    assert abs(a - b) / a < 1e-10


def test_spectral_derivative_trig():
    g = Grid((np.pi, np.pi), (32, 32))
    u = sample(lambda x, y: np.sin(3 * x) * np.cos(2 * y), g)
    d = spectral_derivative(u, (1, 2))
    x, y = g.mesh()
    expected = -12 * np.cos(3 * x) * np.cos(2 * y)
    assert np.max(np.abs(d.values - expected)) < 1e-11


def test_odd_derivative_stays_real():
    g = Grid((np.pi,), (16,))
    rng = np.random.default_rng(0)
    d = spectral_derivative(SampledField(g, rng.standard_normal(16)), (1,))
    assert np.max(np.abs(d.values.imag)) < 1e-12


def test_save_load(tmp_path):
    g = Grid((1.0, 2.0), (4, 6))
    rng = np.random.default_rng(5)
    u = SampledField(g, rng.standard_normal(g.shape) + 1j * rng.standard_normal(g.shape))
    path, side = save_field(u, tmp_path / "u.hlfd")
    assert side.exists()
    v = load_field(path)
    assert v.grid == g and v.side is Side.PHYSICAL
    np.testing.assert_array_equal(v.values, u.values)
    s = forward_transform(u)
    save_field(s, tmp_path / "s.hlfd")
    assert load_field(tmp_path / "s.hlfd").side is Side.FREQUENCY


def test_load_rejects_garbage(tmp_path):
    p = tmp_path / "bad"
    p.write_bytes(b"nope")
    with pytest.raises(FieldError):
        load_field(p)
    g = Grid((1.0,), (4,))
    path, _ = save_field(SampledField(g, np.ones(4)), tmp_path / "t")
    path.write_bytes(path.read_bytes()[:-8])
    with pytest.raises(FieldError, match="payload"):
        load_field(path)


@pytest.mark.parametrize("extent,points", [((1.0,), (5,)), ((1.0,), (2,)), ((-1.0,), (8,)), ((1.0, 1.0), (8,))])
def test_grid_validation(extent, points):
    with pytest.raises(FieldError):
        Grid(extent, points)


def test_field_validation():
    g = Grid((1.0,), (4,))
    with pytest.raises(FieldError):
        SampledField(g, np.ones(5))
    with pytest.raises(FieldError):
        SampledField(g, np.array([0, 1, np.nan, 0]))
    with pytest.raises(FieldError, match="non-finite sample"):
        with np.errstate(divide="ignore"):
            sample(lambda x: 1 / x, Grid((1.0,), (4,)))
    with pytest.raises(FieldError):
        forward_transform(forward_transform(SampledField(g, np.ones(4))))


@given(arrays(np.float64, (8, 6), elements=st.floats(-1e3, 1e3)),
       arrays(np.float64, (8, 6), elements=st.floats(-1e3, 1e3)),
       st.floats(-10, 10))
def test_transform_linear(a, b, c):
    g = Grid((1.0, 2.0), (8, 6))
    lhs = forward_transform(SampledField(g, a + c * b)).values
    rhs = forward_transform(SampledField(g, a)).values + c * forward_transform(SampledField(g, b)).values
    scale = 1.0 + np.max(np.abs(lhs))
    assert np.max(np.abs(lhs - rhs)) <= 1e-10 * scale


@given(arrays(np.float64, (16,), elements=st.floats(-1e6, 1e6)))
def test_roundtrip_property(a):
    g = Grid((3.0,), (16,))
    u = SampledField(g, a)
    back = inverse_transform(forward_transform(u)).values
    assert np.max(np.abs(back - a)) <= 1e-12 * (1.0 + np.max(np.abs(a)))
