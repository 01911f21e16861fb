import math

import numpy as np
import pytest

from holderlab.certify import (CertifyError, annulus_derivative_norm, annulus_volume, certify_grouped,
                               certify_isotropic, codim_one_orders, default_lambda_grid, group_orders,
                               hausdorff_young_ratio, low_order_orders, orders_up_to, richardson_change)
from holderlab.field import Grid
from holderlab.holder import AnisotropyProfile
from holderlab.symbols import (ch_reduction_symbol, constant_symbol, heat_time_derivative, log_distance_symbol,
                               riesz_second_order)

SHORT = default_lambda_grid(9)


def test_lambda_grid():
    g = default_lambda_grid()
    assert len(g) == 33 and g[0] == 2.0 ** -8 and g[-1] == pytest.approx(2.0 ** 8)


def test_order_enumerations():
    assert len(orders_up_to(2, 2)) == 6
    assert len(orders_up_to(3, 3)) == math.comb(6, 3)
    assert group_orders([[0], [1]], [1, 2], 2) == [(0, 0), (0, 1), (0, 2), (1, 0), (1, 1), (1, 2)]
    assert all(o[-1] <= 1 and sum(o[:-1]) <= 2 for o in codim_one_orders(3, 2))
    assert len(low_order_orders(3)) == 18


def test_constant_symbol_norm_is_shell_volume():
    # only the zero-order term survives, so the norm is sqrt(vol) for p = 2
    m = constant_symbol(1.0, 2)
    norm = annulus_derivative_norm(m, 1.0, 2.0, orders_up_to(2, 1), resolution=48)
    assert norm == pytest.approx(math.sqrt(annulus_volume((1.0, 1.0), 48)), rel=1e-12)
    # {1/8 <= |x|+|y| < 8} has area 2 (64 - 1/64)
    assert norm == pytest.approx(math.sqrt(2 * (64 - 1 / 64)), rel=0.02)


def test_riesz_certifies():
    cert = certify_isotropic(riesz_second_order(1, 0, 3), None, 2.0, 3, SHORT)
    assert cert.passed and cert.drift < 1e-6
    assert cert.mu_estimate == max(cert.per_lambda_norms)
    assert cert.to_csv().count("\r\n") == len(SHORT) + 1


def test_heat_certifies_low_order():
    cert = certify_grouped(heat_time_derivative(1.0), None, 1, 2.0, SHORT, variant="low_order")
    assert cert.passed


@pytest.mark.parametrize("variant", ["codim_one", "codim_one_plus"])
def test_reduction_symbol_codim_one(variant):
    cert = certify_grouped(ch_reduction_symbol(0, 1.0, 3), None, 2, 2.0, SHORT, variant=variant)
    assert cert.passed


def test_log_control_fails():
    cert = certify_isotropic(log_distance_symbol((1.0, 1.0)), None, 2.0, 2, SHORT)
    assert not cert.passed and cert.drift > 0.01


def test_threshold_errors():
    with pytest.raises(CertifyError, match="must exceed"):
        certify_isotropic(riesz_second_order(1, 0, 3), None, 2.0, 1)
    with pytest.raises(CertifyError):
        certify_grouped(riesz_second_order(1, 0, 2), [[0], [1]], [0, 1], 2.0, variant="group_caps")
    with pytest.raises(CertifyError):
        certify_grouped(riesz_second_order(1, 0, 2), [[0], [0]], 2, 2.0)
    with pytest.raises(CertifyError):
        certify_grouped(riesz_second_order(1, 0, 2), None, 2, 2.0, variant="bogus")
    with pytest.raises(CertifyError):
        annulus_derivative_norm(riesz_second_order(1, 0, 2), 1.0, 3.0, [(0, 0)])
    with pytest.raises(CertifyError):
        certify_isotropic(riesz_second_order(1, 0, 2), None, 2.0, 2, [0.0, 1.0])


def test_group_caps_with_gamma():
    m = riesz_second_order(1, 0, 2)
    cert = certify_grouped(m, [[0], [1]], [1, 1], 2.0, SHORT, variant="group_caps")
    assert cert.passed and "groups=[[0], [1]]" in cert.notes
    with pytest.raises(CertifyError):
        certify_grouped(m, [[0], [1]], [1, 1], 2.0, SHORT, variant="group_caps", gamma=0.6)


def test_richardson_step_independence():
    m = riesz_second_order(1, 0, 2)
    assert richardson_change(m, 2.0, orders_up_to(2, 2)) < 1e-3


def test_hausdorff_young_bound():
    g = Grid((16 * np.pi, 16 * np.pi), (256, 256))
    p = AnisotropyProfile(0.5, {0: 1.0}, {1: 1.0})
    for q in (1.25, 1.5, 2.0):
        r = hausdorff_young_ratio(riesz_second_order(1, 0, 2), q, g, p)
        assert r <= 1.0 + 1e-9
    assert hausdorff_young_ratio(riesz_second_order(1, 0, 2), 2.0, g, p) == pytest.approx(1.0, rel=1e-9)


def test_certificate_serialization():
    cert = certify_isotropic(riesz_second_order(1, 0, 2), None, 2.0, 2, SHORT)
    d = cert.to_dict()
    assert d["passed"] is True and len(d["per_lambda_norms"]) == len(SHORT)
    assert '"symbol": "riesz{dims=2,k=1,l=0}"' in cert.to_json()
