import math

import numpy as np
import pytest
from scipy.integrate import quad

from renvol.errors import DimensionUnsupportedError, FitDegeneracyError
from renvol.families import RoundSphere, integrate_scalar, sphere_area
from renvol.gauge import hyperbolic_normal_form, solve_special_defining
from renvol.volume import (
    L_identity_sides,
    default_eps_grid,
    gauge_volume_difference,
    hyperbolic_reference,
    log_coefficient_direct,
    renormalized_volume,
    subtraction_volume,
    volume_anomaly,
    volume_profile,
)

NODES = {
    1: (64,),
    2: (32, 1),
    3: (20, 20, 1),
    4: (16, 16, 16, 1),
    5: (12, 12, 12, 12, 1),
    6: (10, 10, 10, 10, 10, 1),
}


def model(n):
    return hyperbolic_normal_form(n, nodes=NODES[n])


def test_profile_matches_radial_quadrature():
    nf = model(2)
    eps = 0.05
    sample = volume_profile(nf, [eps])[0]
    closed = (
        0.25
        * sphere_area(2)
        * quad(lambda r: r**-3 * (1.0 - r**2) ** 2, eps, 1.0)[0]
    )
    assert float(sample) == pytest.approx(closed, rel=1e-12)


def test_reference_values():
    assert hyperbolic_reference(1) == pytest.approx(-2.0 * math.pi)
    assert hyperbolic_reference(3) == pytest.approx(4.0 / 3.0 * math.pi**2)
    assert hyperbolic_reference(5) == pytest.approx(-8.0 / 15.0 * math.pi**3)
    assert hyperbolic_reference(2) == pytest.approx(-2.0 * math.pi)
    assert hyperbolic_reference(4) == pytest.approx(math.pi**2)
    assert hyperbolic_reference(6) == pytest.approx(-(math.pi**3) / 3.0)


@pytest.mark.parametrize("n", [1, 3, 5])
def test_odd_dimensional_volume_routes_agree(n):
    fit = renormalized_volume(model(n))
    ref = hyperbolic_reference(n)
    assert fit.V_subtraction == pytest.approx(ref, rel=1e-9)
    assert fit.V == pytest.approx(ref, rel=1e-9)
    assert not fit.has_log


@pytest.mark.parametrize("n", [2, 4, 6])
def test_even_dimensional_log_routes_agree(n):
    fit = renormalized_volume(model(n))
    ref = hyperbolic_reference(n)
    assert fit.has_log
    assert fit.L == pytest.approx(ref, rel=1e-6)
    assert fit.L_direct == pytest.approx(ref, rel=1e-6)


def test_leading_coefficient_is_volume_over_n():
    nf = model(3)
    fit = renormalized_volume(nf)
    vol = integrate_scalar(np.ones(nf.grid.shape), nf.family, nf.grid)
    assert fit.coefficients["c0"] == pytest.approx(vol / 3.0, rel=1e-10)


def test_half_grid_refit_within_uncertainty():
    eps = default_eps_grid()
    nf = model(3)
    fit = renormalized_volume(nf, eps_grid=eps)
    refit = renormalized_volume(nf, eps_grid=eps[::2])
    assert abs(refit.V - fit.V) <= max(fit.uncertainty, 1e-12) + refit.residual


def test_fit_degeneracy_guard():
    nf = model(2)
    # two samples cannot determine a three-term basis
    with pytest.raises(FitDegeneracyError):
        renormalized_volume(nf, eps_grid=np.array([0.1, 0.09]))


def test_log_coefficient_direct_odd_dimension_guard():
    with pytest.raises(DimensionUnsupportedError):
        log_coefficient_direct(model(3))


def test_subtraction_route_is_fit_independent():
    nf = model(1)
    assert subtraction_volume(nf) == pytest.approx(-2.0 * math.pi, rel=1e-12)


class TestGaugeChange:
    def test_volume_shift_has_no_constant_term_odd_n(self):
        nf = model(3)
        diff = gauge_volume_difference(nf, "0.1*cos(theta)")
        assert abs(diff["V_hat_minus_V"]) < 5e-7

    def test_log_shift_vanishes_even_n(self):
        nf = model(2)
        diff = gauge_volume_difference(nf, "0.1*cos(theta)")
        assert abs(diff["L_hat_minus_L"]) < 5e-9

    def test_constant_factor_shifts_by_anomaly(self):
        # V_hat - V_g for constant Upsilon equals L * tau in the surface case
        nf = model(2)
        tau = 0.2
        diff = gauge_volume_difference(nf, str(tau))
        assert diff["V_hat_minus_V"] == pytest.approx(-2.0 * math.pi * tau, rel=1e-8)


class TestAnomaly:
    @pytest.mark.parametrize(
        "expr", ["0.1*cos(theta)", "0.05*sin(theta)**2", "0.2"]
    )
    def test_two_routes_agree(self, expr):
        rep = volume_anomaly(RoundSphere(2, 0.5), expr, nodes=(24, 1))
        assert rep.discrepancy < 1e-8

    def test_constant_factor_closed_form(self):
        rep = volume_anomaly(RoundSphere(2, 0.5), "0.2", nodes=(24, 1))
        assert rep.anomaly_integral == pytest.approx(-2.0 * math.pi * 0.2, rel=1e-10)


def test_surface_identity_round_sphere():
    Ld, Li = L_identity_sides(RoundSphere(2, 0.5), (24, 1))
    assert Li == pytest.approx(-2.0 * math.pi)
    assert Ld == pytest.approx(Li, rel=1e-10)
