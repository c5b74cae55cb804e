import math

import numpy as np
import pytest

from renvol.errors import DomainError, GaugeBreakdownError
from renvol.gauge import (
    SeriesNormalForm,
    change_of_gauge,
    hyperbolic_normal_form,
    odd_radial_derivatives,
    solve_special_defining,
)
from renvol.families import HopfSphere3, RoundSphere
from renvol.fg import fg_expand


@pytest.fixture(scope="module")
def nf2():
    return hyperbolic_normal_form(2, nodes=(24, 1))


def test_hyperbolic_model_density_is_binomial(nf2):
    # density (1 - r^2)^n has coefficients C(n, j/2)(-1)^{j/2}
    cs = nf2.density_coefficients(order=4)
    assert float(cs[0].flat[0]) == 1.0
    assert float(cs[2].flat[0]) == -2.0
    assert float(cs[4].flat[0]) == 1.0
    assert float(cs[1].flat[0]) == 0.0


def test_hyperbolic_model_einstein_residual(nf2):
    for r in (0.1, 0.5, 0.9):
        assert nf2.einstein_residual_at(r) < 1e-10


def test_chart_radius_endpoints():
    from renvol.gauge import ball_model_radius

    assert ball_model_radius(0.0) == 1.0
    assert ball_model_radius(1.0) == 0.0
    assert ball_model_radius(0.5) == pytest.approx(1.0 / 3.0)


class TestSpecialDefiningFunction:
    def test_zero_boundary_data(self, nf2):
        om = solve_special_defining(nf2, "0")
        assert np.abs(om.values).max() == 0.0

    def test_constant_boundary_data(self, nf2):
        om = solve_special_defining(nf2, "0.3")
        assert np.abs(om.values - 0.3).max() < 1e-12

    def test_boundary_values_match(self, nf2):
        om = solve_special_defining(nf2, "0.1*cos(theta)")
        theta = nf2.grid.coords[0]
        want = 0.1 * np.cos(theta)
        assert np.abs(om.values[0][:, 0] - want).max() < 1e-14

    def test_caustic_detection(self, nf2):
        # steep data breaks the marching before the far end
        with pytest.raises(GaugeBreakdownError):
            solve_special_defining(nf2, "2.5*cos(theta)", r_max=0.95)


@pytest.mark.parametrize("n", [2, 3, 4])
def test_gauge_function_is_even(n):
    nodes = {2: (24, 1), 3: (16, 16, 1), 4: (12, 12, 12, 1)}[n]
    nf = hyperbolic_normal_form(n, nodes=nodes)
    ests = odd_radial_derivatives(nf, "0.1*cos(theta)", n + 1)
    for order, est in ests.items():
        assert est < 1e-6, (order, est)


class TestGaugeMap:
    def test_identity_gauge(self, nf2):
        om = solve_special_defining(nf2, "0")
        gm = change_of_gauge(om)
        eps = 0.05
        assert np.abs(gm.epshat(eps) - eps).max() < 1e-12

    def test_constant_gauge(self, nf2):
        tau = 0.2
        om = solve_special_defining(nf2, str(tau))
        gm = change_of_gauge(om)
        eps = 0.05
        # inverting rhat = r e^tau at rhat = eps gives b = e^{-tau}
        assert np.abs(gm.epshat(eps) - eps * math.exp(-tau)).max() < 1e-10

    def test_inversion_residual(self, nf2):
        om = solve_special_defining(nf2, "0.1*cos(theta)")
        gm = change_of_gauge(om)
        eps = 0.03
        # the forward map applied to the inverse must reproduce eps
        assert gm.roundtrip(eps) < 1e-12

    def test_cutoff_map_is_even(self, nf2):
        om = solve_special_defining(nf2, "0.1*cos(theta)")
        gm = change_of_gauge(om)
        eps = np.linspace(0.01, 0.06, 12)
        bs = np.stack([gm.b(e).ravel() for e in eps])
        # fit b(x, eps) on powers 0..4 of eps at every boundary point; the
        # odd coefficients must vanish through order n + 1 = 3
        V = np.vander(eps, 5, increasing=True)
        coef, _, _, _ = np.linalg.lstsq(V, bs, rcond=None)
        assert np.abs(coef[1]).max() < 1e-6
        assert np.abs(coef[3]).max() < 1e-3

    def test_domain_guard(self, nf2):
        om = solve_special_defining(nf2, "0.1*cos(theta)")
        gm = change_of_gauge(om)
        with pytest.raises(DomainError):
            gm.epshat(10.0)


def test_series_normal_form_density_matches_closed_form():
    # the truncated sphere expansion reproduces the closed-form density
    fam = HopfSphere3(0.5)
    from tests_support import hopf_band_grid

    grid = hopf_band_grid(fam, dtype=float)
    ps = fg_expand(fam, 4, grid=grid)
    nf = SeriesNormalForm(ps)
    r = 0.15
    want = (1.0 - r**2) ** 3
    assert np.abs(nf.density(r) - want).max() < 1e-9
