import numpy as np
import pytest

from renvol.curvature import curvature_pack
from renvol.errors import IndeterminacyError, InsufficientOrderError
from renvol.families import (
    AxisSpec,
    ConformalRescaling,
    FlatTorus,
    HopfSphere3,
    RoundSphere,
)
from renvol.fg import einstein_residual, fg_expand, volume_series


def hopf_grid(fam, m=18, dtype=np.longdouble):
    """Pole-free band of the torus-adapted sphere chart; the remaining
    angles are symmetry directions."""
    axes = [AxisSpec("gl", 0.6, 0.97)] + list(fam.chart_axes[1:])
    return fam.grid((m, 1, 1), axes=axes, dtype=dtype)


@pytest.fixture(scope="module")
def sphere_expansion():
    fam = HopfSphere3(0.5)
    return fam, fg_expand(fam, 4, grid=hopf_grid(fam))


def test_quarter_sphere_matches_closed_form(sphere_expansion):
    fam, ps = sphere_expansion
    g0 = ps.coeffs[0]
    # (1 - r^2)^2 g0 = g0 - 2 r^2 g0 + r^4 g0
    for j, c in ((0, 1.0), (2, -2.0), (4, 1.0)):
        assert np.abs(ps.coeffs[j] - c * g0).max() < 1e-8


def test_odd_coefficients_vanish(sphere_expansion):
    _, ps = sphere_expansion
    assert np.abs(ps.coeffs[1]).max() < 1e-9
    assert np.abs(ps.coeffs[3]).max() < 1e-9
    assert ps.flags[3] == "free"


def test_second_coefficient_is_minus_schouten(sphere_expansion):
    fam, ps = sphere_expansion
    P = curvature_pack(fam, ps.grid.mesh(), depth=2).require("schouten")
    assert np.abs(ps.coeffs[2] + P).max() < 1e-8


def test_einstein_residual_small(sphere_expansion):
    _, ps = sphere_expansion
    assert einstein_residual(ps) < 1e-8


def test_flat_torus_expansion_is_trivial():
    ps = fg_expand(FlatTorus(3), 2)
    for c in ps.coeffs[1:]:
        assert np.abs(c).max() == 0.0


def test_surface_boundary_trace_and_log_term():
    fam = RoundSphere(2, 0.5)
    # stay away from the chart poles, where 1/sin^2 amplifies the
    # differentiation error of the recursion
    grid = fam.grid((32, 1), axes=[AxisSpec("gl", 0.5, 2.6), fam.chart_axes[-1]])
    ps = fg_expand(fam, 2, grid=grid)
    ginv = np.linalg.inv(ps.coeffs[0])
    tr = np.einsum("...ij,...ij->...", ginv, ps.coeffs[2])
    # trace of the order-2 coefficient is -R/2; the log coefficient drops out
    assert np.abs(tr + 4.0).max() < 1e-9
    assert ps.h is None or np.abs(ps.h).max() < 1e-9


def test_order_limits_raise():
    with pytest.raises(IndeterminacyError):
        fg_expand(RoundSphere(2, 0.5), 3)
    with pytest.raises(IndeterminacyError):
        fg_expand(FlatTorus(3), 6)


def test_metric_at_interpolates_series(sphere_expansion):
    _, ps = sphere_expansion
    r = 0.2
    want = (1.0 - r**2) ** 2 * ps.coeffs[0]
    assert np.abs(ps.metric_at(r) - want).max() < 1e-7


class TestVolumeSeries:
    def test_determinant_route_matches_closed_forms(self, sphere_expansion):
        _, ps = sphere_expansion
        vs = volume_series(ps)
        assert vs.discrepancy < 1e-9
        # density (1 - r^2)^3: v2 = -3, v4 = 3
        assert np.abs(vs.v(2) + 3.0).max() < 1e-8
        assert np.abs(vs.v(4) - 3.0).max() < 1e-7

    def test_truncation_guard(self, sphere_expansion):
        _, ps = sphere_expansion
        vs = volume_series(ps)
        with pytest.raises(InsufficientOrderError):
            vs.v(6)


@pytest.mark.parametrize("n", [4, 5, 6])
def test_second_coefficient_general_boundary(n):
    # conformally flat boundaries keep the recursion spectrally exact: the
    # factor depends on one Fourier axis only
    fam = ConformalRescaling(FlatTorus(n), "0.1*cos(x0)")
    grid = fam.grid((16,) + (1,) * (n - 1))
    ps = fg_expand(fam, 2, grid=grid)
    P = curvature_pack(fam, grid.mesh(), depth=2).require("schouten")
    assert np.abs(ps.coeffs[2] + P).max() < 1e-8
