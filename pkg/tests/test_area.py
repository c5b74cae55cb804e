import math

import numpy as np
import pytest

from renvol.area import (
    Embedding,
    HopfTorus,
    LatitudeCircle,
    area_anomaly,
    equivariant_minimal_graph,
    geodesic_between,
    k2_log_coefficient,
    renormalized_area,
    submanifold_geometry,
    totally_geodesic,
)
from renvol.errors import (
    DimensionUnsupportedError,
    DomainError,
    ImmersionError,
    ShootingError,
    SymmetryError,
)
from renvol.families import AxisSpec, FlatTorus, HopfSphere3, RoundSphere, sphere_area
from renvol.gauge import hyperbolic_normal_form, solve_special_defining

UPS = "0.1*cos(theta)"


@pytest.fixture(scope="module")
def arc():
    return geodesic_between([0.9, 0.3], [2.3, 0.3])


@pytest.fixture(scope="module")
def latitude_graph():
    return equivariant_minimal_graph(LatitudeCircle(1.0), 2)


@pytest.fixture(scope="module")
def torus_graph():
    return equivariant_minimal_graph(HopfTorus(0.6), 3)


@pytest.fixture(scope="module")
def surface_gauge():
    nf = hyperbolic_normal_form(2, nodes=(24, 1))
    return solve_special_defining(nf, UPS)


class TestGeodesics:
    def test_antipodal_endpoints_give_diameter(self):
        Y = geodesic_between([0.0, 0.0], [math.pi, 0.0])
        assert Y.kind == "diameter"

    def test_coincident_endpoints_rejected(self):
        with pytest.raises(DomainError):
            geodesic_between([0.4, 0.2], [0.4, 0.2])

    def test_diameter_length_is_exactly_logarithmic(self):
        Y = totally_geodesic(0, 2)
        eps = np.array([0.1, 0.05, 0.02])
        prof = Y.area_profile(eps)
        want = 2.0 * np.log(1.0 / eps)
        assert np.abs(np.asarray(prof, dtype=float) - want).max() < 1e-14

    def test_diameter_renormalization(self):
        fit = renormalized_area(totally_geodesic(0, 2))
        assert fit.K == pytest.approx(2.0, abs=1e-10)
        assert abs(fit.A) < 1e-10

    def test_arc_orthogonality(self, arc):
        assert arc.boundary_orthogonality() < 1e-10

    def test_arc_asymptotic_curvature(self, arc):
        # any geodesic carries the same log coefficient as the diameter
        fit = renormalized_area(arc)
        assert fit.K == pytest.approx(2.0, abs=1e-5)


class TestTotallyGeodesic:
    def test_plane_in_three_space(self):
        fit = renormalized_area(totally_geodesic(1, 2))
        assert fit.A == pytest.approx(-2.0 * math.pi, rel=1e-10)
        assert not fit.has_log

    def test_space_in_four_space(self):
        fit = renormalized_area(totally_geodesic(2, 3))
        assert fit.K == pytest.approx(-2.0 * math.pi, rel=1e-8)
        assert fit.K_quadrature == pytest.approx(-2.0 * math.pi, rel=1e-6)

    def test_leading_coefficient_is_boundary_area_over_k(self):
        for k, n in ((1, 2), (2, 3), (3, 4)):
            fit = renormalized_area(totally_geodesic(k, n))
            want = sphere_area(k, 0.5) / k
            assert fit.coefficients["c0"] == pytest.approx(want, rel=1e-8)

    def test_dimension_guard(self):
        with pytest.raises(DimensionUnsupportedError):
            totally_geodesic(3, 3)


class TestEquivariantShooting:
    def test_latitude_recovers_closed_form_plane(self, latitude_graph):
        # the filling of a latitude circle is a ball-model plane: a circle
        # orthogonal to the unit circle in the meridian half-disk
        Y = latitude_graph
        cb, R = 1.0 / math.cos(1.0), math.tan(1.0)
        ts = np.linspace(Y.sol.t[0], Y.sol.t[-1], 400)
        pts = Y.sol.sol(ts)
        dev = np.abs(np.hypot(pts[0], pts[1] - cb) - R)
        assert dev.max() < 1e-8

    def test_latitude_interior_residual(self, latitude_graph):
        assert latitude_graph.interior_residual() < 1e-9

    def test_latitude_orthogonality(self, latitude_graph):
        assert latitude_graph.boundary_orthogonality() < 1e-8

    def test_latitude_renormalized_area(self, latitude_graph):
        # rigid motions of the ball preserve A, so the tilted plane keeps
        # the equatorial value
        fit = renormalized_area(latitude_graph)
        assert fit.A == pytest.approx(-2.0 * math.pi, rel=1e-8)

    def test_equatorial_circle_is_flat_graph(self):
        Y = equivariant_minimal_graph(LatitudeCircle(0.5 * math.pi), 2)
        us = [abs(Y.u(r)) for r in (0.01, 0.05, 0.2)]
        assert max(us) < 1e-8

    def test_torus_two_route_log_coefficient(self, torus_graph):
        fit = renormalized_area(torus_graph)
        patch = hopf_torus_patch(0.6)
        K_formula = k2_log_coefficient(patch)
        assert fit.K == pytest.approx(K_formula, rel=1e-3)
        assert fit.K_quadrature == pytest.approx(K_formula, rel=1e-3)
        assert fit.K_quadrature == pytest.approx(fit.K, rel=1e-3)

    def test_torus_regularity(self, torus_graph):
        assert torus_graph.boundary_orthogonality() < 1e-8
        assert torus_graph.interior_residual() < 1e-8

    def test_graph_expansion_parity(self, latitude_graph, torus_graph):
        # odd radial derivatives of u vanish through order k + 1.  The
        # r^(k+2) log r term and its higher relatives leak into the order
        # k + 1 slot of any finite-window polynomial fit, so that slot only
        # resolves to about 1e-4; the order-1 slot is clean.
        for Y in (latitude_graph, torus_graph):
            rs = np.linspace(0.005, 0.1, 40)
            us = np.array([Y.u(r) for r in rs])
            top = Y.k + 6
            cols = [rs**p for p in range(0, top + 1)]
            for q in range(Y.k + 2, top + 1, 2):
                cols.append(rs**q * np.log(rs))
            A = np.stack(cols, -1)
            scale = np.sqrt((A * A).sum(0))
            coef = np.linalg.lstsq(A / scale, us, rcond=None)[0] / scale
            assert abs(coef[1]) < 1e-6, Y.kind
            for p in range(3, Y.k + 2, 2):
                assert abs(coef[p]) < 1e-3, (Y.kind, p)

    def test_bracket_failure_reports_diagnostics(self):
        with pytest.raises(ShootingError) as info:
            equivariant_minimal_graph(HopfTorus(0.6), 3, s_max=0.2)
        assert info.value.bracket is not None

    def test_asymmetric_boundary_rejected(self):
        with pytest.raises(SymmetryError):
            equivariant_minimal_graph(LatitudeCircle(1.0), 3)
        with pytest.raises(SymmetryError):
            equivariant_minimal_graph(object(), 2)


class TestGaugeBehaviour:
    def test_odd_k_area_is_gauge_invariant(self, surface_gauge):
        Y = totally_geodesic(1, 2)
        base = renormalized_area(Y)
        gauged = renormalized_area(Y, gauge=surface_gauge)
        assert abs(gauged.A - base.A) < 5e-5

    def test_even_k_log_coefficient_is_gauge_invariant(self, arc, surface_gauge):
        base = renormalized_area(arc)
        gauged = renormalized_area(arc, gauge=surface_gauge)
        assert abs(gauged.K - base.K) < 1e-6

    def test_point_anomaly_two_routes(self, arc, surface_gauge):
        base = renormalized_area(arc)
        gauged = renormalized_area(arc, gauge=surface_gauge)
        endpoint_sum = area_anomaly(arc, UPS, 0)
        assert gauged.A - base.A == pytest.approx(endpoint_sum, abs=1e-5)

    def test_surface_anomaly_constant_factor(self):
        patch = equatorial_patch()
        tau = 0.3
        K = k2_log_coefficient(patch)
        assert area_anomaly(patch, str(tau), 2) == pytest.approx(K * tau, abs=1e-6)

    def test_anomaly_argument_validation(self, arc):
        with pytest.raises(DimensionUnsupportedError):
            area_anomaly(arc, UPS, 1)


def hopf_torus_patch(alpha0):
    emb = Embedding(
        [str(alpha0), "xi0", "xi1"],
        2,
        3,
        axes=(
            AxisSpec("periodic", 0.0, 2.0 * math.pi),
            AxisSpec("periodic", 0.0, 2.0 * math.pi),
        ),
    )
    return submanifold_geometry(emb, HopfSphere3(0.5), nodes=(1, 1))


def equatorial_patch():
    emb = Embedding(
        ["pi/2", "xi0", "xi1"],
        2,
        3,
        axes=(AxisSpec("gl", 0.0, math.pi), AxisSpec("periodic", 0.0, 2.0 * math.pi)),
    )
    return submanifold_geometry(emb, RoundSphere(3, 0.5), nodes=(12, 8))


class TestSubmanifoldGeometry:
    def test_equator_is_totally_geodesic(self):
        emb = Embedding(
            ["pi/2", "xi0", "xi1"],
            2,
            3,
            axes=(AxisSpec("gl", 0.0, math.pi), AxisSpec("periodic", 0.0, 2.0 * math.pi)),
        )
        patch = submanifold_geometry(emb, RoundSphere(3, 1.0), nodes=(8, 8))
        assert np.abs(patch.second_form).max() < 1e-12
        assert patch.area() == pytest.approx(4.0 * math.pi, rel=1e-9)

    def test_latitude_circle_mean_curvature(self):
        th0 = 1.1
        emb = Embedding(
            [str(th0), "xi0"], 1, 2, axes=(AxisSpec("periodic", 0.0, 2.0 * math.pi),)
        )
        patch = submanifold_geometry(emb, RoundSphere(2, 1.0), nodes=(8,))
        Hn = np.sqrt(
            np.einsum(
                "...c,...cd,...d->...",
                patch.mean_curvature,
                patch.normal_metric,
                patch.mean_curvature,
            )
        )
        assert np.abs(Hn - 1.0 / math.tan(th0)).max() < 1e-6

    def test_equatorial_schouten_trace(self):
        patch = equatorial_patch()
        trP = np.einsum("...ab,...ab->...", patch.induced_inv, patch.schouten_tangent)
        assert np.abs(trP - 4.0).max() < 1e-9
        assert k2_log_coefficient(patch) == pytest.approx(-2.0 * math.pi, rel=1e-9)

    def test_flat_boundary_reduces_to_willmore_integrand(self):
        # with a flat ambient representative the curvature term drops and
        # the log-coefficient integrand is -1/8 |H|^2
        emb = Embedding(
            ["xi0", "xi1", "0.1*sin(xi0)"],
            2,
            3,
            axes=(
                AxisSpec("periodic", 0.0, 2.0 * math.pi),
                AxisSpec("periodic", 0.0, 2.0 * math.pi),
            ),
        )
        patch = submanifold_geometry(emb, FlatTorus(3), nodes=(24, 1))
        assert np.abs(patch.schouten_tangent).max() < 1e-14
        H2 = np.einsum(
            "...c,...cd,...d->...",
            patch.mean_curvature,
            patch.normal_metric,
            patch.mean_curvature,
        )
        willmore = -0.125 * patch.integrate(H2)
        assert k2_log_coefficient(patch) == pytest.approx(willmore, rel=1e-12)

    def test_degenerate_immersion_rejected(self):
        # the map ignores xi1, so the induced metric drops rank
        emb = Embedding(
            ["1.0+0.0*xi1", "xi0+0.0*xi1", "1.0"],
            2,
            3,
            axes=(AxisSpec("gl", 0.5, 2.5), AxisSpec("gl", 0.5, 2.5)),
        )
        with pytest.raises(ImmersionError):
            submanifold_geometry(emb, RoundSphere(3, 1.0), nodes=(4, 4))
