"""Order-by-order Einstein recursion for the radial expansion of the
boundary-metric family, and the volume-element expansion derived from it.

The radial metric is represented as a truncated polynomial in r whose
coefficients are tensor fields on the boundary quadrature grid; spatial
derivatives of coefficient fields use the grid's spectral differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .curvature import curvature_pack
from .errors import IndeterminacyError, InsufficientOrderError
from .series import TruncSeries, _refined_inverse, series_einsum


def ricci_series(gs: TruncSeries, grid) -> TruncSeries:
    """Ricci tensor of a matrix-series metric, coefficientwise on the grid.

    Spatial derivatives act on each radial coefficient field.
    """
    ginv = gs.matinv()
    dg = gs.map(grid.gradient)  # (..., k, i, j) per coefficient

    def sym_of(c):
        # c has axes (..., k, i, j); build d_i g_jm + d_j g_im - d_m g_ij
        return c + np.swapaxes(c, -3, -2) - np.moveaxis(c, -3, -1)

    sym = dg.map(sym_of)
    gamma = series_einsum("...lm,...ijm->...lij", ginv, sym).scaled(0.5)
    dgamma = gamma.map(grid.gradient)  # (..., d, l, i, j)

    t1 = dgamma.map(lambda c: np.einsum("...aaij->...ij", c))
    t2 = dgamma.map(lambda c: np.einsum("...iaaj->...ij", c))
    tr_gamma = gamma.map(lambda c: np.einsum("...aab->...b", c))
    t3 = series_einsum("...m,...mij->...ij", tr_gamma, gamma)
    t4 = series_einsum("...aib,...baj->...ij", gamma, gamma)
    return t1 - t2 + t3 - t4


@dataclass
class PowerSeriesMetric:
    """Radial expansion g_r = sum_j g^(j) r^j (+ h r^n log r for n even)."""

    family: object
    grid: object
    n: int
    order: int
    coeffs: list
    h: np.ndarray = None
    flags: list = field(default_factory=list)
    obstruction_norm: float = 0.0

    def series(self, order=None):
        if order is None:
            order = self.order
        if order > self.order:
            raise InsufficientOrderError("expansion not computed to that order")
        return TruncSeries(self.coeffs[: order + 1], order)

    def metric_at(self, r):
        """Evaluate g_r on the grid (log term included when present)."""
        vals = self.series().eval(r)
        if self.h is not None and np.any(self.h):
            r = np.asarray(r, dtype=float)
            vals = vals + (r**self.n * np.log(r))[(...,) + (None,) * (self.coeffs[0].ndim)] * self.h
        return vals


def _trace0(g0inv, X):
    return np.einsum("...ij,...ij->...", g0inv, X)


def _einstein_terms(gs: TruncSeries, grid, n):
    """The interior-component Einstein residual of the series metric, as a
    series (one radial order beyond gs is meaningless and not produced)."""
    gp = gs.deriv()
    gpp = gp.deriv()
    ginv = gs.matinv()
    ric = ricci_series(gs, grid)
    s = series_einsum("...kl,...kl->...", ginv, gp)  # tr(g^{-1} g')
    A = gpp.shift(1)
    B = gp.scaled(1.0 - n)
    C = -series_einsum("...,...ij->...ij", s, gs)
    m1 = series_einsum("...ik,...kl->...il", gp, ginv)
    D = -series_einsum("...il,...lj->...ij", m1, gp).shift(1)
    E = series_einsum("...,...ij->...ij", s, gp).scaled(0.5).shift(1)
    G = ric.scaled(-2.0).shift(1)
    return A + B + C + D + E + G


def einstein_residual(ps: PowerSeriesMetric, through_order=None):
    """Max norm of the Einstein-equation series coefficients (log slot
    excluded), for verification."""
    if through_order is None:
        through_order = ps.order - 1
        if ps.order >= ps.n and ps.obstruction_norm > 1e-10:
            # the trace-free part at the critical order is an obstruction,
            # not an equation we solved
            through_order = ps.n - 2
    gs = ps.series()
    F = _einstein_terms(gs, ps.grid, ps.n)
    return max(
        float(np.abs(F.coeff(j)).max()) for j in range(through_order + 1)
    )


def fg_expand(family, order, grid=None) -> PowerSeriesMetric:
    """Solve the Einstein recursion for the radial expansion coefficients.

    Coefficients beyond the formally determined range raise; the trace-free
    part at the critical order is zero-filled and flagged, with the
    obstruction extracted as the log coefficient when n is even.
    """
    n = family.n
    if n % 2 == 0 and order > n:
        raise IndeterminacyError(
            f"expansion order {order} exceeds n={n}: log terms enter at order n"
        )
    if order >= 2 * n:
        raise IndeterminacyError(
            f"expansion order {order} out of range for n={n}"
        )
    if grid is None:
        grid = family.grid()
    x = grid.mesh()
    g0 = family.metric(x).astype(grid.dtype)
    g0inv = _refined_inverse(g0)
    zero = np.zeros_like(g0)

    coeffs = [g0]
    flags = ["determined"]
    h = None
    obstruction_norm = 0.0

    for nu in range(1, order + 1):
        gs = TruncSeries(coeffs + [zero], nu)
        F = _einstein_terms(gs, grid, n)
        K = F.coeff(nu - 1)
        trK = _trace0(g0inv, K)
        Ktf = K - (trK / n)[..., None, None] * g0
        if nu != n:
            t = trK / (nu * (2.0 * n - nu))
            Xtf = Ktf / (nu * (n - nu))
            coeffs.append(Xtf + (t / n)[..., None, None] * g0)
            # beyond order n the result depends on the zero-filled free part
            flags.append("determined" if nu < n else "determined-given-free-part")
        else:  # nu == n: the obstruction order
            t = trK / n**2
            obstruction_norm = float(np.abs(Ktf).max())
            if n % 2 == 0:
                h = -Ktf / n
            coeffs.append((t / n)[..., None, None] * g0)
            flags.append("trace-determined-only" if n % 2 == 0 else "free")
    return PowerSeriesMetric(
        family=family,
        grid=grid,
        n=n,
        order=order,
        coeffs=coeffs,
        h=h,
        flags=flags,
        obstruction_norm=obstruction_norm,
    )


# ---------------------------------------------------------------------------
# volume-element expansion


@dataclass
class VolumeSeries:
    """Even-order coefficients of (det g_r / det g_0)^{1/2} on the grid."""

    order: int
    det_route: list  # v^(j) fields from the determinant series, j = 0..order
    closed_route: dict  # closed-form fields where printed (keys 2, 4, 6)
    discrepancy: float

    def v(self, j):
        if j > self.order:
            raise InsufficientOrderError(f"v^({j}) beyond truncation {self.order}")
        return self.det_route[j]


def det_ratio_series(ps: PowerSeriesMetric) -> TruncSeries:
    """(det g_r / det g_0)^{1/2} as a scalar series on the grid."""
    gs = ps.series()
    g0inv = _refined_inverse(ps.coeffs[0])
    M = TruncSeries([np.einsum("...ik,...kj->...ij", g0inv, c) for c in gs.coeffs], gs.order)
    t = series_einsum("...ij,...ji->...", M.matinv(), M.deriv())
    return t.integrate().truncate(gs.order).scaled(0.5).exp()


def closed_form_v(family, grid, j, pack=None):
    """The printed local curvature expression for v^(j), j in {2, 4, 6}."""
    n = family.n
    if pack is None:
        pack = curvature_pack(family, grid.mesh(), depth=4 if j >= 6 else 2)
    if j == 2:
        return -pack.scalar / (4.0 * (n - 1))
    ginv = pack.inverse
    P = pack.require("schouten")
    trP = np.einsum("...ij,...ij->...", ginv, P)
    Pud = np.einsum("...ia,...aj->...ij", ginv, P)  # P^i_j
    P2 = np.einsum("...ij,...ji->...", Pud, Pud)
    if j == 4:
        return (trP**2 - P2) / 8.0
    if j == 6:
        B = pack.require("bach")
        PB = np.einsum("...ia,...jb,...ab,...ij->...", ginv, ginv, P, B)
        P3 = np.einsum("...ij,...jk,...ki->...", Pud, Pud, Pud)
        return (-PB + 3.0 * trP * P2 - 2.0 * P3 - trP**3) / 48.0
    raise InsufficientOrderError("closed forms are available for v^(2), v^(4), v^(6) only")


def volume_series(ps: PowerSeriesMetric) -> VolumeSeries:
    """Volume-element coefficients via the determinant series, with the
    printed closed forms alongside where available."""
    D = det_ratio_series(ps)
    det_route = [D.coeff(j) for j in range(ps.order + 1)]
    closed = {}
    discrepancy = 0.0
    depth = 4 if (ps.order >= 6 and ps.n >= 4) else 2
    pack = curvature_pack(ps.family, ps.grid.mesh(), depth=depth)
    for j in (2, 4, 6):
        if j <= ps.order and j <= ps.n:
            closed[j] = closed_form_v(ps.family, ps.grid, j, pack=pack)
            discrepancy = max(discrepancy, float(np.abs(closed[j] - det_route[j]).max()))
    return VolumeSeries(
        order=ps.order, det_route=det_route, closed_route=closed, discrepancy=discrepancy
    )
