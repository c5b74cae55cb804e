"""Closed-form boundary metric families on compact manifolds.

A family supplies the metric components g_ij and their first and second
coordinate partials analytically in a fixed chart, together with a
tensor-product quadrature grid (Gauss-Legendre in non-periodic angles,
trapezoid in periodic ones) and spectral differentiation along each axis.
Third and fourth partials, where needed, are obtained downstream by
Richardson-extrapolated central differences of the analytic evaluators.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import sympy as sp

from .errors import ShapeError

# ---------------------------------------------------------------------------
# axes, grids, spectral differentiation


@dataclass(frozen=True)
class AxisSpec:
    kind: str  # "gl" or "periodic"
    lo: float
    hi: float


def gauss_legendre_axis(lo, hi, m):
    x, w = np.polynomial.legendre.leggauss(m)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def lagrange_diff_matrix(x):
    """Differentiation matrix for polynomial interpolation on nodes x.

    Computed in the dtype of x (extended precision supported)."""
    x = np.asarray(x)
    m = x.size
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    w = 1.0 / np.prod(dx, axis=1)
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def _fourier_wavenumbers(m, length):
    k = np.fft.fftfreq(m, d=1.0 / m) * (2.0 * np.pi / length)
    if m % 2 == 0:
        k[m // 2] = 0.0  # drop Nyquist in the derivative
    return k


class Grid:
    """Tensor-product quadrature/differentiation grid in chart coordinates.

    Per-axis rules: Gauss-Legendre nodes (interior, so pole-free on sphere
    charts) or uniform nodes with trapezoid weights on periodic axes.
    An axis with a single node represents a direction the sampled fields
    do not depend on; its derivative is identically zero.
    """

    def __init__(self, axes, nodes, dtype=np.float64):
        if len(nodes) != len(axes):
            raise ShapeError("one node count per chart axis required")
        self.dtype = np.dtype(dtype)
        self.axes = tuple(axes)
        self.shape = tuple(int(m) for m in nodes)
        self.coords = []
        self.axis_weights = []
        self._diffs = []
        for spec, m in zip(axes, self.shape):
            if m < 1:
                raise ShapeError("node counts must be positive")
            if spec.kind == "periodic":
                length = spec.hi - spec.lo
                x = spec.lo + length * np.arange(m) / m
                w = np.full(m, length / m)
                self.coords.append(x)
                self.axis_weights.append(w)
                self._diffs.append(("fft", _fourier_wavenumbers(m, length)))
            elif spec.kind == "gl":
                x, w = gauss_legendre_axis(spec.lo, spec.hi, m)
                self.coords.append(x)
                self.axis_weights.append(w)
                # the matrix is built in the grid dtype from the exact
                # double-precision node values, so extended-precision
                # differentiation stays consistent with the sampled points
                D = lagrange_diff_matrix(x.astype(self.dtype)) if m > 1 else np.zeros((1, 1))
                self._diffs.append(("mat", D))
            else:
                raise ShapeError(f"unknown axis kind {spec.kind!r}")
        self.ndim = len(self.axes)

    @property
    def npoints(self):
        return int(np.prod(self.shape))

    def mesh(self):
        """Chart coordinates of all grid points, shape (*shape, ndim)."""
        grids = np.meshgrid(*self.coords, indexing="ij")
        return np.stack(grids, axis=-1).astype(self.dtype)

    def weights(self):
        """Coordinate-measure quadrature weights, shape (*shape,)."""
        w = self.axis_weights[0]
        for wi in self.axis_weights[1:]:
            w = np.multiply.outer(w, wi)
        return w

    def diff(self, values, axis):
        """Spectral derivative of a grid field along one chart axis.

        ``values`` has shape (*shape, ...extra); extra axes ride along.
        """
        values = np.asarray(values)
        if values.shape[: self.ndim] != self.shape:
            raise ShapeError("field shape does not match grid layout")
        kind, op = self._diffs[axis]
        if self.shape[axis] == 1:
            return np.zeros_like(values)
        moved = np.moveaxis(values, axis, -1)
        if kind == "mat":
            out = moved @ op.T
        else:
            spec = np.fft.fft(moved, axis=-1)
            out = np.fft.ifft(spec * (1j * op), axis=-1).real
        return np.moveaxis(out, -1, axis)

    def gradient(self, values):
        """All chart partials; the derivative index is inserted after the
        grid axes: (*shape, ...extra) -> (*shape, ndim, ...extra)."""
        parts = [self.diff(values, k) for k in range(self.ndim)]
        return np.stack(parts, axis=self.ndim)


# ---------------------------------------------------------------------------
# conformal factors


class Upsilon:
    """A closed-form conformal factor Upsilon(x) with analytic partials.

    Built from a sympy expression in the chart symbols x0..x{n-1}
    (``theta``/``phi`` accepted as aliases for x0/x1).
    """

    def __init__(self, expr, n):
        self.n = n
        syms = sp.symbols(f"x0:{n}")
        if isinstance(expr, str):
            local = {f"x{i}": syms[i] for i in range(n)}
            local["theta"] = syms[0]
            if n > 1:
                local["phi"] = syms[1]
            expr = sp.sympify(expr, locals=local)
        self.expr = sp.sympify(expr)
        self.syms = syms
        self._f = sp.lambdify(syms, self.expr, modules="numpy")
        self._grad = [sp.lambdify(syms, sp.diff(self.expr, s), modules="numpy") for s in syms]
        self._hess = [
            [sp.lambdify(syms, sp.diff(self.expr, si, sj), modules="numpy") for sj in syms]
            for si in syms
        ]

    def _call(self, fn, x):
        x = np.asarray(x)
        args = [x[..., i] for i in range(self.n)]
        out = np.asarray(fn(*args))
        if not np.issubdtype(out.dtype, np.floating):
            out = out.astype(x.dtype if np.issubdtype(x.dtype, np.floating) else float)
        return np.broadcast_to(out, x.shape[:-1]).copy()

    def value(self, x):
        return self._call(self._f, x)

    def grad(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([self._call(g, x) for g in self._grad], axis=-1)

    def hess(self, x):
        x = np.asarray(x, dtype=float)
        rows = [
            np.stack([self._call(self._hess[i][j], x) for j in range(self.n)], axis=-1)
            for i in range(self.n)
        ]
        return np.stack(rows, axis=-2)

    def __repr__(self):
        return f"Upsilon({self.expr}, n={self.n})"


# ---------------------------------------------------------------------------
# metric families

_DEFAULT_NODES = {1: 96, 2: 48, 3: 24, 4: 12, 5: 8, 6: 6}


class MetricFamily:
    """Base class: closed-form metric with analytic partials through order 2."""

    n: int
    kind: str
    chart_axes: tuple
    euler_characteristic = None

    def metric(self, x):
        raise NotImplementedError

    def dmetric(self, x):
        """partial_k g_ij, shape (..., n, n, n) indexed [..., k, i, j]."""
        raise NotImplementedError

    def d2metric(self, x):
        """partial_k partial_l g_ij, shape (..., n, n, n, n), [..., k, l, i, j]."""
        raise NotImplementedError

    def default_nodes(self):
        m = _DEFAULT_NODES.get(self.n, 6)
        return (m,) * self.n

    def grid(self, nodes=None, axes=None, dtype=np.float64):
        """Quadrature grid; ``axes`` may restrict to sub-intervals of the
        chart (useful for pointwise-local work away from chart ends)."""
        if nodes is None:
            nodes = self.default_nodes()
        elif np.isscalar(nodes):
            nodes = (int(nodes),) * self.n
        return Grid(self.chart_axes if axes is None else axes, nodes, dtype=dtype)

    def volume_density(self, x):
        g = self.metric(x)
        return np.sqrt(np.linalg.det(g))

    def volume(self, grid=None):
        if grid is None:
            grid = self.grid()
        return float(np.sum(grid.weights() * self.volume_density(grid.mesh())))


class FlatTorus(MetricFamily):
    """Flat torus with the identity metric on [0, L_1) x ... x [0, L_n)."""

    kind = "flat-torus"
    euler_characteristic = 0

    def __init__(self, n, periods=None):
        self.n = n
        if periods is None:
            periods = (2.0 * np.pi,) * n
        self.periods = tuple(float(p) for p in periods)
        self.chart_axes = tuple(AxisSpec("periodic", 0.0, p) for p in self.periods)

    def metric(self, x):
        x = np.asarray(x)
        eye = np.eye(self.n, dtype=x.dtype if np.issubdtype(x.dtype, np.floating) else float)
        return np.broadcast_to(eye, x.shape[:-1] + (self.n, self.n)).copy()

    def dmetric(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self.n,) * 3, dtype=x.dtype)

    def d2metric(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self.n,) * 4, dtype=x.dtype)


class FlatBox(MetricFamily):
    """Identity metric on the box [-L, L]^n with Gauss-Legendre axes.

    Not closed; used as the base chart for conformally flat metrics on a
    coordinate patch, where every field is smooth on the closed box and
    spectral differentiation is uniformly accurate.
    """

    kind = "flat-box"

    def __init__(self, n, halfwidth=1.0):
        self.n = n
        self.halfwidth = float(halfwidth)
        self.chart_axes = tuple(AxisSpec("gl", -self.halfwidth, self.halfwidth) for _ in range(n))

    def metric(self, x):
        x = np.asarray(x)
        eye = np.eye(self.n, dtype=x.dtype if np.issubdtype(x.dtype, np.floating) else float)
        return np.broadcast_to(eye, x.shape[:-1] + (self.n, self.n)).copy()

    def dmetric(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self.n,) * 3, dtype=x.dtype)

    def d2metric(self, x):
        x = np.asarray(x)
        return np.zeros(x.shape[:-1] + (self.n,) * 4, dtype=x.dtype)


class _DiagonalAngleFamily(MetricFamily):
    """Diagonal metric g_ii = scale_i^2 * prod_j f_j(x_j)^{p_ij}; partials
    assembled from d/dx log g_ii."""

    def _log_derivs(self, x):
        """Return (g_diag, u, du) with u_k = partial_k log g_ii (shape
        (..., n, n): [..., k, i]) and du_k = partial_k^2 log g_ii."""
        raise NotImplementedError

    def metric(self, x):
        gdiag, _, _ = self._log_derivs(x)
        out = np.zeros(gdiag.shape + (self.n,), dtype=gdiag.dtype)
        idx = np.arange(self.n)
        out[..., idx, idx] = gdiag
        return out

    def dmetric(self, x):
        gdiag, u, _ = self._log_derivs(x)
        out = np.zeros(gdiag.shape[:-1] + (self.n,) * 3, dtype=gdiag.dtype)
        idx = np.arange(self.n)
        # partial_k g_ii = g_ii * u[k, i]
        out[..., :, idx, idx] = gdiag[..., None, :] * u
        return out

    def d2metric(self, x):
        gdiag, u, du = self._log_derivs(x)
        out = np.zeros(gdiag.shape[:-1] + (self.n,) * 4, dtype=gdiag.dtype)
        idx = np.arange(self.n)
        # partial_k partial_l g_ii = g_ii (u_k u_l + delta_kl du_k)
        term = u[..., :, None, :] * u[..., None, :, :]
        term[..., idx, idx, :] += du
        out[..., :, :, idx, idx] = gdiag[..., None, None, :] * term
        return out


class RoundSphere(_DiagonalAngleFamily):
    """Round n-sphere of radius a in a single polar chart.

    Coordinates th_1..th_n with g = a^2 (dth_1^2 + sin^2 th_1 dth_2^2 + ...);
    the final angle is periodic. Quadrature nodes are interior so the polar
    axis is never sampled.
    """

    kind = "round-sphere"

    def __init__(self, n, radius=1.0):
        self.n = n
        self.radius = float(radius)
        axes = [AxisSpec("gl", 0.0, np.pi) for _ in range(n - 1)]
        axes.append(AxisSpec("periodic", 0.0, 2.0 * np.pi))
        self.chart_axes = tuple(axes)
        self.euler_characteristic = 2 if n % 2 == 0 else 0

    @property
    def curvature(self):
        return 1.0 / self.radius**2

    def _log_derivs(self, x):
        x = np.asarray(x)
        base = x.shape[:-1]
        n = self.n
        s = np.sin(x)
        gdiag = np.empty(base + (n,), dtype=x.dtype)
        u = np.zeros(base + (n, n), dtype=x.dtype)
        du = np.zeros(base + (n, n), dtype=x.dtype)
        log_s2 = np.cumsum(np.log(s[..., : n - 1] ** 2), axis=-1) if n > 1 else None
        gdiag[..., 0] = self.radius**2
        for i in range(1, n):
            gdiag[..., i] = self.radius**2 * np.exp(log_s2[..., i - 1])
        # only polar angles (never the periodic one) enter the warp factors
        cot = np.cos(x[..., : n - 1]) / s[..., : n - 1]
        csc2 = 1.0 / s[..., : n - 1] ** 2
        for i in range(n):
            for k in range(i):
                u[..., k, i] = 2.0 * cot[..., k]
                du[..., k, i] = -2.0 * csc2[..., k]
        return gdiag, u, du

    def default_nodes(self):
        m = _DEFAULT_NODES.get(self.n, 6)
        return (m,) * self.n


class HopfSphere3(_DiagonalAngleFamily):
    """Round 3-sphere of radius a in torus-adapted coordinates.

    Coordinates (al, ph1, ph2) with g = a^2 (dal^2 + cos^2 al dph1^2 +
    sin^2 al dph2^2), al in (0, pi/2).  The surfaces {al = const} are the
    flat tori of revolution, which makes this chart the natural one for
    equivariant submanifold work.
    """

    kind = "round-sphere-hopf"
    euler_characteristic = 0

    def __init__(self, radius=1.0):
        self.n = 3
        self.radius = float(radius)
        self.chart_axes = (
            AxisSpec("gl", 0.0, np.pi / 2),
            AxisSpec("periodic", 0.0, 2.0 * np.pi),
            AxisSpec("periodic", 0.0, 2.0 * np.pi),
        )

    @property
    def curvature(self):
        return 1.0 / self.radius**2

    def _log_derivs(self, x):
        x = np.asarray(x)
        base = x.shape[:-1]
        al = x[..., 0]
        gdiag = np.empty(base + (3,), dtype=x.dtype)
        gdiag[..., 0] = self.radius**2
        gdiag[..., 1] = self.radius**2 * np.cos(al) ** 2
        gdiag[..., 2] = self.radius**2 * np.sin(al) ** 2
        u = np.zeros(base + (3, 3), dtype=x.dtype)
        du = np.zeros(base + (3, 3), dtype=x.dtype)
        u[..., 0, 1] = -2.0 * np.tan(al)
        du[..., 0, 1] = -2.0 / np.cos(al) ** 2
        u[..., 0, 2] = 2.0 / np.tan(al)
        du[..., 0, 2] = -2.0 / np.sin(al) ** 2
        return gdiag, u, du

    def default_nodes(self):
        return (24, 24, 24)


class ConformalRescaling(MetricFamily):
    """ghat = e^{2 Upsilon} g for a base family g and closed-form Upsilon."""

    kind = "conformal-rescaling"

    def __init__(self, base: MetricFamily, upsilon):
        self.base = base
        self.n = base.n
        self.chart_axes = base.chart_axes
        self.euler_characteristic = base.euler_characteristic
        if not isinstance(upsilon, Upsilon):
            upsilon = Upsilon(upsilon, base.n)
        self.upsilon = upsilon

    def default_nodes(self):
        return self.base.default_nodes()

    def metric(self, x):
        conf = np.exp(2.0 * self.upsilon.value(x))
        return conf[..., None, None] * self.base.metric(x)

    def dmetric(self, x):
        conf = np.exp(2.0 * self.upsilon.value(x))
        du = self.upsilon.grad(x)
        g = self.base.metric(x)
        dg = self.base.dmetric(x)
        inner = 2.0 * du[..., :, None, None] * g[..., None, :, :] + dg
        return conf[..., None, None, None] * inner

    def d2metric(self, x):
        conf = np.exp(2.0 * self.upsilon.value(x))
        du = self.upsilon.grad(x)
        d2u = self.upsilon.hess(x)
        g = self.base.metric(x)
        dg = self.base.dmetric(x)
        d2g = self.base.d2metric(x)
        # A_k = 2 U_k g + dg_k ; d2ghat_{lk} = e^{2U} (2 U_l A_k + d_l A_k)
        A = 2.0 * du[..., :, None, None] * g[..., None, :, :] + dg
        dA = (
            2.0 * d2u[..., :, :, None, None] * g[..., None, None, :, :]
            + 2.0 * du[..., None, :, None, None] * dg[..., :, None, :, :]
            + d2g
        )
        out = 2.0 * du[..., :, None, None, None] * A[..., None, :, :, :] + dA
        return conf[..., None, None, None, None] * out


class StereographicSphere(ConformalRescaling):
    """Round n-sphere of radius a in a stereographic box chart.

    g = (2a)^2 (1 + |x|^2)^{-2} delta on [-L, L]^n.  The chart has no
    degeneracies, so spectral differentiation of derived grid fields is
    uniformly accurate; it covers only part of the sphere, which is enough
    for pointwise and homogeneity-based computations.
    """

    kind = "round-sphere-stereographic"

    def __init__(self, n, radius=1.0, halfwidth=1.0):
        r2 = sp.Add(*[sp.Symbol(f"x{i}") ** 2 for i in range(n)])
        expr = sp.log(2 * sp.Float(radius)) - sp.log(1 + r2)
        super().__init__(FlatBox(n, halfwidth), Upsilon(expr, n))
        self.radius = float(radius)

    @property
    def curvature(self):
        return 1.0 / self.radius**2


# ---------------------------------------------------------------------------
# fields and integration


@dataclass
class ScalarField:
    values: np.ndarray
    grid: Grid
    evaluator: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ShapeError("scalar field values do not match the grid shape")
        if not np.all(np.isfinite(self.values)):
            raise ShapeError("scalar field contains non-finite values")


@dataclass
class TensorField:
    values: np.ndarray
    grid: Grid
    valence: int = 2
    evaluator: object = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape[: self.grid.ndim] != self.grid.shape:
            raise ShapeError("tensor field values do not match the grid shape")


def scalar_field(func, family, grid=None):
    if grid is None:
        grid = family.grid()
    x = grid.mesh()
    vals = func(x) if callable(func) else np.broadcast_to(func, grid.shape)
    return ScalarField(np.asarray(vals, dtype=float), grid, evaluator=func)


def integrate_scalar(f, family, grid=None):
    """Integral of f against the Riemannian volume element of the family.

    np.sum performs pairwise reduction, so the result is deterministic for
    a fixed grid.
    """
    if isinstance(f, ScalarField):
        grid = f.grid
        values = f.values
    else:
        if grid is None:
            grid = family.grid()
        values = np.asarray(f, dtype=float)
        if values.shape != grid.shape:
            raise ShapeError("values do not match the grid shape")
    dens = family.volume_density(grid.mesh())
    return float(np.sum(grid.weights() * dens * values))


# ---------------------------------------------------------------------------
# Richardson-extrapolated central differences of pointwise evaluators

_FD_STEP = 1e-3


def _shift(x, k, h):
    y = np.array(x, dtype=float, copy=True)
    y[..., k] += h
    return y


def richardson_partial(func, x, k, h=_FD_STEP):
    """O(h^4) first partial of a pointwise tensor map along coordinate k."""

    def central(step):
        return (func(_shift(x, k, step)) - func(_shift(x, k, -step))) / (2.0 * step)

    return (4.0 * central(h / 2.0) - central(h)) / 3.0


def richardson_gradient(func, x, h=_FD_STEP):
    """Stack of all first partials; derivative index leads the output axes
    after the point axes: (..., n, *tensor)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    parts = [richardson_partial(func, x, k, h) for k in range(n)]
    return np.stack(parts, axis=x.ndim - 1)


def richardson_hessian(func, x, h=_FD_STEP):
    """O(h^4) second partials, shape (..., n, n, *tensor), symmetric."""
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    f0 = func(x)

    def second_diag(k, step):
        return (func(_shift(x, k, step)) - 2.0 * f0 + func(_shift(x, k, -step))) / step**2

    def second_cross(k, l, step):
        pp = func(_shift(_shift(x, k, step), l, step))
        pm = func(_shift(_shift(x, k, step), l, -step))
        mp = func(_shift(_shift(x, k, -step), l, step))
        mm = func(_shift(_shift(x, k, -step), l, -step))
        return (pp - pm - mp + mm) / (4.0 * step**2)

    rows = [[None] * n for _ in range(n)]
    for k in range(n):
        rows[k][k] = (4.0 * second_diag(k, h / 2.0) - second_diag(k, h)) / 3.0
        for l in range(k + 1, n):
            val = (4.0 * second_cross(k, l, h / 2.0) - second_cross(k, l, h)) / 3.0
            rows[k][l] = val
            rows[l][k] = val
    stacked = np.stack([np.stack(r, axis=x.ndim - 1) for r in rows], axis=x.ndim - 1)
    return stacked


def sphere_area(n, radius=1.0):
    """Surface area of the round n-sphere of the given radius."""
    return 2.0 * math.pi ** ((n + 1) / 2.0) / math.gamma((n + 1) / 2.0) * radius**n
