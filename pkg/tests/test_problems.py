import math

import numpy as np
import pytest

from holderlab.field import Grid, SampledField, spectral_derivative
from holderlab.problems import (BoundaryTraceProblem, ProblemError, Variant, boundary_ensemble,
                                causal_residual, ch_collocation, ch_ode_oracle, ch_problem1_solve,
                                ch_problem2_solve, ch_problem2_trace, example1_counterexample, example1_field,
                                example2_heat, example2_field, heat_boundary_trace, heat_convolution_oracle,
                                increments, mexican_hat_data, oracle_comparison, oracle_denominator,
                                flux_data_norms, reduction_check, schauder_ratio_experiment)
from holderlab.symbols import ch_boundary_denominator, evaluate

HEAT_GRID = Grid((math.pi, 32.0), (128, 128))
BOUNDARY = Grid((math.pi, 16.0), (32, 64))


@pytest.fixture(scope="module")
def member():
    return boundary_ensemble(BOUNDARY, 1, 0)[0]


def test_heat_trace_matches_convolution():
    h = mexican_hat_data(HEAT_GRID)
    spectral = heat_boundary_trace(h).values.real
    conv = heat_convolution_oracle(HEAT_GRID)
    assert np.linalg.norm(spectral - conv) / np.linalg.norm(conv) < 1e-6


def test_heat_trace_is_causal():
    rho = heat_boundary_trace(mexican_hat_data(HEAT_GRID))
    assert causal_residual(rho) < 1e-6


@pytest.mark.parametrize("xi,xi0", [(0.5, 0.3), (1.0, -2.0), (2.0, 10.0), (0.1, 0.05)])
def test_ode_oracle_matches_collocation(xi, xi0):
    assert ch_collocation(xi, xi0) == pytest.approx(ch_ode_oracle(xi, xi0), rel=1e-7)


@pytest.mark.parametrize("a", [1.0, 2.5])
def test_boundary_symbol_oracle(a):
    res = oracle_comparison(a, 8)
    assert res["max_rel_error"] < 1e-12
    if a != 1.0:
        assert res["max_rel_error_without_a_on_fraction"] > 0.1


def test_oracle_repeated_root_and_ambiguity():
    # xi0 = 0: double root -xi and the flux condition leaves u = e^{-xi x}
    assert ch_ode_oracle(2.0, 0.0) == pytest.approx(-2.0)
    assert oracle_denominator(2.0, 0.0, 1.5) == pytest.approx(evaluate(ch_boundary_denominator(1.5), [2.0, 0.0]))
    with pytest.raises(ProblemError, match="zero frequency"):
        ch_ode_oracle(0.0, 0.0)


def test_problem1_solution(member):
    sol = ch_problem1_solve(member, a=1.0)
    D = sol.derivative
    ut = D((0, 0, 1)).values
    pde = ut + D((4, 0, 0)).values + 2 * D((2, 2, 0)).values + D((0, 4, 0)).values
    assert np.max(np.abs(pde)) < 1e-10 * np.max(np.abs(ut))
    flux = D((0, 3, 0)).values[:, 0, :] + D((2, 1, 0)).values[:, 0, :]
    assert np.max(np.abs(flux)) < 1e-10 * np.max(np.abs(D((0, 3, 0)).values))
    assert sol.trace_error() < 1e-12
    rho = sol.rho
    dyn = spectral_derivative(rho, (0, 1)).values - spectral_derivative(rho, (2, 0)).values - member.values
    assert np.max(np.abs(dyn)) < 1e-5 * member.max_abs()
    assert sol.decay_at_depth < 1e-6


def test_problem2_solution(member):
    sol = ch_problem2_solve(member, a=1.0)
    un = sol.derivative((0, 1, 0)).values[:, 0, :]
    rt = spectral_derivative(sol.rho, (0, 1)).values
    assert np.max(np.abs(rt - un - member.values)) < 1e-5 * member.max_abs()
    assert sol.trace_error() < 1e-12
    np.testing.assert_allclose(sol.rho.values, ch_problem2_trace(member).values)


def test_forced_problem_matches_pde():
    h = boundary_ensemble(BOUNDARY, 1, 3)[0]
    probe = ch_problem1_solve(h)
    g = probe.interior.grid
    x, z, t = g.mesh()
    zz = z + g.extent[1]  # stored x_N axis starts at 0
    # odd in x: zero x'-mean, like the boundary data
    f = np.exp(-x ** 2 - (zz - 1.0) ** 2 * 4 - (t - 8.0) ** 2) * np.sin(x)
    sol = ch_problem1_solve(h, f=SampledField(g, np.broadcast_to(f, g.shape)))
    D = sol.derivative
    lhs = D((0, 0, 1)).values + D((4, 0, 0)).values + 2 * D((2, 2, 0)).values + D((0, 4, 0)).values
    inner = slice(2, g.points[1] // 2)
    assert np.max(np.abs((lhs - f)[:, inner, :])) < 1e-6 * np.max(np.abs(f))
    assert sol.trace_error() < 1e-10


def test_boundary_problem_validation(member):
    BoundaryTraceProblem("laplace_dynamic", 1.0, member)
    bad = member.with_values(member.values + 1.0)
    with pytest.raises(ProblemError, match="vanish"):
        BoundaryTraceProblem(Variant.FLUX_DYNAMIC, 1.0, bad)
    with pytest.raises(ProblemError):
        BoundaryTraceProblem(Variant.FLUX_DYNAMIC, 0.0, member)
    p = BoundaryTraceProblem(Variant.FLUX_DYNAMIC, 1.0, member)
    np.testing.assert_allclose(p.trace().values, ch_problem2_trace(member).values)


def test_boundary_ensemble_invariants():
    hs = boundary_ensemble(BOUNDARY, 3, 5, zero_members=(1,))
    assert hs[1].max_abs() == 0
    for h in hs:
        assert causal_residual(h) == 0
        assert np.max(np.abs(h.values.real.mean(axis=0))) < 1e-14
    again = boundary_ensemble(BOUNDARY, 3, 5, zero_members=(1,))
    np.testing.assert_array_equal(hs[2].values, again[2].values)


def test_reduction_remainder_decays(member):
    ratios = [r for _, r in reduction_check(member)]
    assert len(ratios) >= 2
    assert all(b < a for a, b in zip(ratios, ratios[1:]))
    assert ratios[-1] < 1e-3


def test_counterexample_log_growth():
    rows = example1_counterexample([64, 128, 256, 512])
    # on the core disc d^2u/dx2^2 = 2 ln(r^2) + bounded: each octave adds 4 ln 2
    np.testing.assert_allclose(increments(rows), 4 * math.log(2), rtol=1e-9)
    d21 = [r.max_d21 for r in rows]
    assert max(d21) / min(d21) < 1.05


def test_example1_support_check():
    g = Grid((4.0, 4.0, 2.0), (32, 32, 8))
    f = example1_field(g, radius=3.0)
    from holderlab.problems import example1_poisson
    with pytest.raises(ProblemError, match="central half"):
        example1_poisson(f, 0.6)


def test_example2_validation():
    with pytest.raises(ProblemError):
        example2_heat(example2_field(Grid((4.0, 4.0), (32, 32))), 0.4)


def test_schauder_small_ensemble():
    stats = schauder_ratio_experiment("laplace_dynamic", 4, seed=1, refine=False, zero_members=(2,))
    assert stats.excluded == [2]
    assert stats.ratios[2] is None
    assert stats.spread < 50 and stats.drift is None and stats.passed
    csv_text = stats.to_csv()
    assert csv_text.startswith("member,ratio") and "\r\n2,,," in csv_text


def test_flux_data_norms_ordered(member):
    norms = flux_data_norms(member, 0.5)
    assert set(norms) == {"1+gamma", "3+gamma"}
    assert 0 < norms["1+gamma"] < norms["3+gamma"]
