"""Normal forms g+ = r^{-2}(g_r + dr^2) and special defining functions.

The gauge freedom is a boundary conformal factor Upsilon; the associated
gauge function omega solves a first-order radial equation marched from
r = 0, and the cutoff change eps -> epshat is obtained by inverting
rhat = r e^{omega} numerically.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline

from .curvature import curvature_pack
from .errors import (
    DomainError,
    GaugeBreakdownError,
    InversionError,
    ShapeError,
)
from .families import MetricFamily, RoundSphere, ScalarField, Upsilon


class NormalForm:
    """A model metric in normal form relative to a boundary representative.

    Subclasses provide the radial family g_r on the boundary grid; at
    r = 0 it equals the representative itself.
    """

    form = None  # "closed-form" | "series-truncated"

    def __init__(self, family, grid=None, r_max=1.0):
        self.family = family
        self.n = family.n
        self.grid = family.grid() if grid is None else grid
        self.r_max = float(r_max)

    def metric_r(self, r):
        raise NotImplementedError

    def inverse_metric_r(self, r):
        return np.linalg.inv(self.metric_r(r))

    def density(self, r):
        """(det g_r / det g_0)^{1/2} on the boundary grid."""
        g0 = self.metric_r(0.0)
        return np.sqrt(np.linalg.det(self.metric_r(r)) / np.linalg.det(g0))

    def density_coefficients(self, order=None):
        """Radial Taylor coefficients of the density, constant index first."""
        raise NotImplementedError


class HyperbolicNormalForm(NormalForm):
    """g_r = (1 - (c/4) r^2)^2 g_0 for a constant-curvature boundary family.

    With the round sphere of radius 1/2 (c = 4) this is the standard
    hyperbolic-space model on the domain (0, 1].
    """

    form = "closed-form"

    def __init__(self, family, grid=None):
        c = family.curvature
        self.s = c / 4.0
        super().__init__(family, grid, r_max=1.0 / np.sqrt(self.s))
        x = self.grid.mesh()
        self._g0 = family.metric(x)
        self._g0inv = np.linalg.inv(self._g0)

    def warp(self, r):
        return 1.0 - self.s * np.asarray(r, dtype=float) ** 2

    def metric_r(self, r):
        f = self.warp(r)
        return np.asarray(f**2)[..., None, None] * self._g0

    def inverse_metric_r(self, r):
        f = self.warp(r)
        return np.asarray(f ** (-2.0))[..., None, None] * self._g0inv

    def density(self, r):
        return np.broadcast_to(self.warp(r) ** self.n, self.grid.shape).copy()

    def density_coefficients(self, order=None):
        from math import comb

        if order is None:
            order = self.n
        out = []
        for j in range(order + 1):
            if j % 2 == 0:
                val = comb(self.n, j // 2) * (-self.s) ** (j // 2)
            else:
                val = 0.0
            out.append(np.full(self.grid.shape, float(val)))
        return out

    def einstein_residual_at(self, r):
        """Pointwise residual of the radial Einstein equation at radius r.

        Constant rescalings leave the lowered Ricci tensor unchanged, so
        Ric(g_r) = Ric(g_0) is available analytically here.
        """
        r = float(r)
        x = self.grid.mesh()
        pack = curvature_pack(self.family, x, depth=2)
        g0, ric = self._g0, pack.ricci
        s, n = self.s, self.n
        f = 1.0 - s * r**2
        fp, fpp = -2.0 * s * r, -2.0 * s
        gp = 2.0 * f * fp * g0
        gpp = 2.0 * (fp**2 + f * fpp) * g0
        tr = 2.0 * n * fp / f  # tr(g^{-1} g')
        res = (
            r * gpp
            + (1.0 - n) * gp
            - tr * f**2 * g0
            - r * 4.0 * fp**2 * g0
            + 0.5 * r * tr * gp
            - 2.0 * r * ric
        )
        return float(np.abs(res).max())


def hyperbolic_normal_form(n, grid=None, nodes=None):
    """The standard hyperbolic model: boundary = round sphere of radius 1/2."""
    family = RoundSphere(n, radius=0.5)
    if grid is None and nodes is not None:
        grid = family.grid(nodes)
    return HyperbolicNormalForm(family, grid)


def ball_model_radius(x_norm):
    """Special defining function of the hyperbolic model in terms of the
    Euclidean unit-ball radius: r = (1 - |x|) / (1 + |x|)."""
    x_norm = np.asarray(x_norm, dtype=float)
    if np.any(x_norm < 0.0) or np.any(x_norm > 1.0):
        raise DomainError("ball radius must lie in [0, 1]")
    return (1.0 - x_norm) / (1.0 + x_norm)


class SeriesNormalForm(NormalForm):
    """Normal form built from a truncated radial expansion."""

    form = "series-truncated"

    def __init__(self, ps, r_max=0.5):
        super().__init__(ps.family, ps.grid, r_max=r_max)
        self.ps = ps

    def metric_r(self, r):
        return self.ps.metric_at(r)

    def density_coefficients(self, order=None):
        from .series import TruncSeries, _refined_inverse, series_einsum

        ps = self.ps
        if order is None:
            order = ps.order
        # the truncated metric is an exact polynomial in r, so padding with
        # zero coefficients extends its determinant expansion exactly
        coeffs = list(ps.coeffs) + [np.zeros_like(ps.coeffs[0])] * max(0, order - ps.order)
        gs = TruncSeries(coeffs, order)
        g0inv = _refined_inverse(ps.coeffs[0])
        M = TruncSeries(
            [np.einsum("...ik,...kj->...ij", g0inv, c) for c in gs.coeffs], order
        )
        t = series_einsum("...ij,...ji->...", M.matinv(), M.deriv())
        D = t.integrate().truncate(order).scaled(0.5).exp()
        return [D.coeff(j) for j in range(order + 1)]


# ---------------------------------------------------------------------------
# the gauge function omega


def _boundary_values(upsilon, grid):
    if isinstance(upsilon, ScalarField):
        if upsilon.grid.shape != grid.shape:
            raise ShapeError("boundary data lives on a different grid")
        return upsilon.values.copy()
    if isinstance(upsilon, str):
        upsilon = Upsilon(upsilon, grid.ndim)
    if isinstance(upsilon, Upsilon):
        return upsilon.value(grid.mesh())
    if callable(upsilon):
        return np.asarray(upsilon(grid.mesh()), dtype=float)
    return np.full(grid.shape, float(upsilon))


@dataclass
class OmegaField:
    """omega(x, r) marched from omega(x, 0) = Upsilon(x)."""

    nf: NormalForm
    rs: np.ndarray  # marching nodes, rs[0] = 0 (may run negative)
    values: np.ndarray  # (len(rs), *grid.shape)
    step: float

    @property
    def grid(self):
        return self.nf.grid

    def boundary_data(self):
        return self.values[0]

    def at_index(self, i):
        return self.values[i]

    def hat_r(self):
        """rhat = r e^omega at every stored node, shape (len(rs), *shape)."""
        extra = (None,) * self.values[0].ndim
        return self.rs[(...,) + extra] * np.exp(self.values)

    def gauge_residual(self, stride=50):
        """Max residual of the radial gauge equation at interior nodes,
        with omega_r estimated by eighth-order central differences."""
        w = self.values
        h = self.step
        # 8th-order central first-derivative weights
        c = np.array([1.0 / 280, -4.0 / 105, 1.0 / 5, -4.0 / 5])
        worst = 0.0
        for i in range(4, len(self.rs) - 4, stride):
            wr = np.zeros_like(w[i])
            for k, ck in enumerate(c):
                off = 4 - k
                wr += ck * (w[i - off] - w[i + off])
            wr /= h
            r = self.rs[i]
            grad = self.grid.gradient(w[i])
            ginv = self.nf.inverse_metric_r(r)
            s = np.einsum("...ij,...i,...j->...", ginv, grad, grad)
            res = 2.0 * wr + r * (wr**2 + s)
            worst = max(worst, float(np.abs(res).max()))
        return worst


def _omega_rate(nf, r, w):
    """The regular branch of the radial gauge equation solved for omega_r."""
    grad = nf.grid.gradient(w)
    ginv = nf.inverse_metric_r(r)
    s = np.einsum("...ij,...i,...j->...", ginv, grad, grad)
    disc = 1.0 - r**2 * s
    if np.min(disc) <= 0.0:
        raise GaugeBreakdownError(
            f"gauge caustic at |r| = {abs(r):.6f}", breakdown_radius=abs(r)
        )
    return -r * s / (1.0 + np.sqrt(disc))


def solve_special_defining(nf, upsilon, r_max=None, dr=1e-3):
    """March the gauge function from its boundary data.

    A negative r_max marches into the fictitious r < 0 side, which is what
    the parity checks sample.
    """
    if r_max is None:
        r_max = 0.9 * nf.r_max
    w = _boundary_values(upsilon, nf.grid)
    h = dr if r_max > 0 else -dr
    nsteps = int(round(abs(r_max) / dr))
    rs = np.empty(nsteps + 1)
    vals = np.empty((nsteps + 1,) + w.shape)
    rs[0] = 0.0
    vals[0] = w
    r = 0.0
    for i in range(1, nsteps + 1):
        k1 = _omega_rate(nf, r, w)
        k2 = _omega_rate(nf, r + h / 2, w + (h / 2) * k1)
        k3 = _omega_rate(nf, r + h / 2, w + (h / 2) * k2)
        k4 = _omega_rate(nf, r + h, w + h * k3)
        w = w + (h / 6) * (k1 + 2 * k2 + 2 * k3 + k4)
        r += h
        rs[i] = r
        vals[i] = w
    return OmegaField(nf=nf, rs=rs, values=vals, step=h)


def odd_radial_derivatives(nf, upsilon, max_order, h=0.1, dr=1e-3):
    """Symmetric-difference estimates of the odd r-derivatives of omega at
    r = 0, max over the grid, as {order: estimate}.

    The stencils annihilate even functions identically, so for an even
    omega the estimates measure only the odd content.
    """
    widths = {1: 1, 3: 2, 5: 3}
    orders = [m for m in range(1, max_order + 1) if m % 2 == 1]
    if any(m not in widths for m in orders):
        raise DomainError("odd derivative estimates implemented through order 5")
    span = widths[max(orders)] * h
    plus = solve_special_defining(nf, upsilon, r_max=span + dr, dr=dr)
    minus = solve_special_defining(nf, upsilon, r_max=-(span + dr), dr=dr)
    stride = int(round(h / dr))

    def f(j):  # omega at r = j h
        return plus.values[j * stride] if j >= 0 else minus.values[-j * stride]

    out = {}
    if 1 in orders:
        out[1] = float(np.abs((f(1) - f(-1)) / (2 * h)).max())
    if 3 in orders:
        est = (f(2) - 2 * f(1) + 2 * f(-1) - f(-2)) / (2 * h**3)
        out[3] = float(np.abs(est).max())
    if 5 in orders:
        est = (f(3) - 4 * f(2) + 5 * f(1) - 5 * f(-1) + 4 * f(-2) - f(-3)) / (2 * h**5)
        out[5] = float(np.abs(est).max())
    return out


# ---------------------------------------------------------------------------
# cutoff change


def _pp_eval(c, breaks, r):
    """Evaluate piecewise-cubic coefficients c (4, nseg, *shape) at
    per-point arguments r (*shape); returns (value, derivative)."""
    nseg = c.shape[1]
    idx = np.clip(np.searchsorted(breaks, r, side="right") - 1, 0, nseg - 1)
    t = r - breaks[idx]
    flat = idx.ravel()
    cols = np.arange(flat.size)

    def gather(k):
        return c[k].reshape(nseg, -1)[flat, cols].reshape(idx.shape)

    c0, c1, c2, c3 = (gather(k) for k in range(4))
    val = ((c0 * t + c1) * t + c2) * t + c3
    der = (3.0 * c0 * t + 2.0 * c1) * t + c2
    return val, der


class GaugeMap:
    """The cutoff correspondence eps -> epshat(x, eps) induced by omega."""

    def __init__(self, omega: OmegaField):
        if omega.step < 0:
            raise DomainError("cutoff map needs a forward-marched gauge field")
        self.omega = omega
        self.rs = omega.rs
        hat = omega.hat_r()
        if np.any(np.diff(hat, axis=0) <= 0.0):
            raise InversionError("r e^omega is not monotone on the marched domain")
        # r e^omega is monotone from 0, so any positive cutoff below the
        # top of the marched domain can be inverted
        self._lo = 0.0
        self._hi = float(hat[-1].min())
        spline = CubicSpline(self.rs, omega.values, axis=0)
        # axis=0 leaves coefficients as (4, nseg, *shape)
        self._c = spline.c

    def epshat(self, eps):
        """epshat(x, eps): the r at which r e^{omega(x, r)} = eps."""
        eps = float(eps)
        if not (self._lo < eps <= self._hi):
            raise DomainError(
                f"cutoff {eps} outside the invertible range ({self._lo:.3e}, {self._hi:.3e}]"
            )
        shape = self.omega.values.shape[1:]
        r = np.full(shape, eps)
        w, _ = _pp_eval(self._c, self.rs, r)
        r = eps * np.exp(-w)
        for _ in range(60):
            w, wr = _pp_eval(self._c, self.rs, r)
            F = r * np.exp(w) - eps
            dF = np.exp(w) * (1.0 + r * wr)
            rn = r - F / dF
            if float(np.abs(rn - r).max()) < 1e-15:
                r = rn
                break
            r = rn
        w, _ = _pp_eval(self._c, self.rs, r)
        if float(np.abs(r * np.exp(w) - eps).max()) > 1e-12:
            raise InversionError("cutoff inversion did not reach tolerance")
        return r

    def b(self, eps):
        """epshat = eps * b."""
        return self.epshat(eps) / eps

    def roundtrip(self, eps):
        """Max |rhat(epshat) - eps|: the forward map applied to the inverse."""
        r = self.epshat(eps)
        w, _ = _pp_eval(self._c, self.rs, r)
        return float(np.abs(r * np.exp(w) - eps).max())


def change_of_gauge(omega: OmegaField) -> GaugeMap:
    return GaugeMap(omega)


# ---------------------------------------------------------------------------
# ambient model metric (for asymptotic curvature checks)


class AmbientModel(MetricFamily):
    """The (n+1)-dimensional model g+ = r^{-2}(g_r + dr^2) of a hyperbolic
    normal form, in the chart (r, x).  Used to sample sectional curvatures
    near the boundary."""

    kind = "ambient-model"

    def __init__(self, nf: HyperbolicNormalForm):
        self.nf = nf
        self.base = nf.family
        self.n = nf.n + 1
        self.chart_axes = None  # sampled pointwise, not on its own grid

    def _pieces(self, x):
        r = x[..., 0]
        y = x[..., 1:]
        s = self.nf.s
        f = 1.0 - s * r**2
        return r, y, s, f

    def metric(self, x):
        x = np.asarray(x, dtype=float)
        r, y, s, f = self._pieces(x)
        nb = self.n - 1
        g0 = self.base.metric(y)
        out = np.zeros(x.shape[:-1] + (self.n, self.n))
        out[..., 0, 0] = r ** (-2.0)
        out[..., 1:, 1:] = (f**2 / r**2)[..., None, None] * g0
        return out

    def dmetric(self, x):
        x = np.asarray(x, dtype=float)
        r, y, s, f = self._pieces(x)
        g0 = self.base.metric(y)
        dg0 = self.base.dmetric(y)
        out = np.zeros(x.shape[:-1] + (self.n,) * 3)
        out[..., 0, 0, 0] = -2.0 * r ** (-3.0)
        dr_fac = -2.0 * s * 2.0 * f / r - 2.0 * f**2 / r**3  # d/dr (f^2/r^2)
        out[..., 0, 1:, 1:] = dr_fac[..., None, None] * g0
        out[..., 1:, 1:, 1:] = (f**2 / r**2)[..., None, None, None] * dg0
        return out

    def d2metric(self, x):
        x = np.asarray(x, dtype=float)
        r, y, s, f = self._pieces(x)
        g0 = self.base.metric(y)
        dg0 = self.base.dmetric(y)
        d2g0 = self.base.d2metric(y)
        out = np.zeros(x.shape[:-1] + (self.n,) * 4)
        out[..., 0, 0, 0, 0] = 6.0 * r ** (-4.0)
        fac = f**2 / r**2
        dfac = -4.0 * s * f / r - 2.0 * f**2 / r**3
        # differentiate dfac = -4 s f / r - 2 f^2 / r^3 once more
        d2fac = 8.0 * s**2 + 12.0 * s * f / r**2 + 6.0 * f**2 / r**4
        out[..., 0, 0, 1:, 1:] = d2fac[..., None, None] * g0
        out[..., 0, 1:, 1:, 1:] = dfac[..., None, None, None] * dg0
        out[..., 1:, 0, 1:, 1:] = dfac[..., None, None, None] * dg0
        out[..., 1:, 1:, 1:, 1:] = fac[..., None, None, None, None] * d2g0
        return out


def sectional_curvatures(family, x):
    """Coordinate-plane sectional curvatures K_ij at the points x."""
    pack = curvature_pack(family, x, depth=2)
    g = pack.metric
    R = pack.riemann
    n = family.n
    out = []
    for i in range(n):
        for j in range(i + 1, n):
            denom = g[..., i, i] * g[..., j, j] - g[..., i, j] ** 2
            out.append(R[..., i, j, i, j] / denom)
    return np.stack(out, axis=-1)
