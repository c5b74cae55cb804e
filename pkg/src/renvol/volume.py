"""Volume of the region {r > eps} in a normal-form model, extraction of the
renormalized volume V and log coefficient L, and the conformal anomaly.

The cutoff expansion is extracted two ways: a least-squares fit on the
parity-correct power basis, and a subtraction route that integrates the
volume element minus its known divergent part.  The subtraction route is
the reference; the fit demonstrates the expansion shape.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .curvature import _algebraic, _flatten, conformal_invariants_6d, curvature_pack
from .errors import (
    DimensionUnsupportedError,
    FitDegeneracyError,
    ResolutionError,
)
from .families import Upsilon, integrate_scalar
from .fg import closed_form_v
from .gauge import (
    HyperbolicNormalForm,
    change_of_gauge,
    hyperbolic_normal_form,
    solve_special_defining,
)

_EPS_FLOOR = 1e-8
_CONDITION_LIMIT = 1e10


def default_eps_grid(count=24, start=0.1, ratio=0.75):
    """Geometric cutoff grid eps_i = start * ratio^i."""
    return start * ratio ** np.arange(count)


def _radial_nodes(a, b, m=80):
    """Gauss-Legendre nodes/weights for integrating from a(x) to b on a
    logarithmic substitution; a may be a field, b is scalar."""
    t, wt = np.polynomial.legendre.leggauss(m)
    t = 0.5 * (t + 1.0)
    wt = 0.5 * wt
    a = np.asarray(a, dtype=float)
    L = np.log(b / a)
    # r = a (b/a)^t; dr = r L dt
    r = a[..., None] * np.exp(L[..., None] * t)
    w = r * L[..., None] * wt
    return r, w


def _poly_density_coeffs(nf):
    """Scalar coefficients b_j with density(r) = sum_j b_j r^j exactly, or
    None when the density is not a polynomial in r."""
    if isinstance(nf, HyperbolicNormalForm):
        return [
            float(c.flat[0]) for c in nf.density_coefficients(order=2 * nf.n)
        ]
    return None


def _laurent_shell(n, bs, a, b):
    """integral_a^b r^{-n-1} sum_j b_j r^j dr in closed form; a, b may be
    fields (broadcastable)."""
    a = np.asarray(a)
    b = np.asarray(b)
    dt = np.result_type(a.dtype, b.dtype, float)
    out = np.zeros(np.broadcast_shapes(a.shape, b.shape), dt)
    for j, bj in enumerate(bs):
        if bj == 0.0:
            continue
        p = j - n
        if p == 0:
            out += bj * np.log(b / a)
        else:
            out += bj * (b**p - a**p) / p
    return out


class _ProfileCache(dict):
    pass


def _inner_constant(nf, r0, m=64):
    """The volume of the fixed inner region {r0 < r < r_max}, cached."""
    cache = getattr(nf, "_inner_cache", None)
    if cache is None:
        cache = _ProfileCache()
        nf._inner_cache = cache
    key = (round(r0, 12), m)
    if key in cache:
        return cache[key]
    if nf.r_max <= r0:
        cache[key] = 0.0
        return 0.0
    dens = nf.family.volume_density(nf.grid.mesh())
    bs = _poly_density_coeffs(nf)
    if bs is not None:
        shell = float(_laurent_shell(nf.n, bs, r0, nf.r_max))
        total = float(np.sum(nf.grid.weights() * dens)) * shell
        cache[key] = total
        return total
    t, wt = np.polynomial.legendre.leggauss(m)
    rs = r0 + 0.5 * (nf.r_max - r0) * (t + 1.0)
    ws = 0.5 * (nf.r_max - r0) * wt
    wx = nf.grid.weights() * dens
    total = 0.0
    for r, w in zip(rs, ws):
        shell = float(np.sum(wx * nf.density(r)))
        total += w * r ** (-nf.n - 1) * shell
    cache[key] = total
    return total


def volume_profile(nf, eps_grid, gauge=None, r0=0.5, m_radial=80):
    """Vol({r > eps}) for each cutoff, or Vol({rhat > eps}) when a gauge
    field is supplied (the region is then {r > epshat(x, eps)})."""
    eps_grid = np.atleast_1d(np.asarray(eps_grid, dtype=float))
    if np.any(eps_grid < _EPS_FLOOR):
        raise ResolutionError(
            f"cutoff below the radial quadrature resolution {_EPS_FLOOR}"
        )
    r0 = min(r0, nf.r_max)
    inner = _inner_constant(nf, r0)
    gm = change_of_gauge(gauge) if gauge is not None and not hasattr(gauge, "epshat") else gauge
    dens0 = nf.family.volume_density(nf.grid.mesh())
    wx = nf.grid.weights() * dens0
    bs = _poly_density_coeffs(nf)
    out = np.empty(eps_grid.size, dtype=np.longdouble if bs is not None else float)
    for k, eps in enumerate(eps_grid):
        lo = gm.epshat(eps) if gm is not None else np.full(nf.grid.shape, eps)
        if bs is not None:
            # polynomial density: the radial integral is a Laurent
            # polynomial plus a log, evaluated in closed form per point;
            # extended precision keeps the huge divergent part from
            # swamping the constant term of the expansion
            shell = _laurent_shell(nf.n, bs, lo.astype(np.longdouble), r0)
        else:
            rs, ws = _radial_nodes(lo, r0, m_radial)
            shell = np.zeros(nf.grid.shape)
            for j in range(rs.shape[-1]):
                r = rs[..., j]
                shell += ws[..., j] * r ** (-nf.n - 1.0) * _density_at(nf, r)
        out[k] = inner + np.sum(wx * shell)
    return out


def _density_at(nf, r):
    """Density field for (possibly) spatially varying radius r."""
    if isinstance(nf, HyperbolicNormalForm):
        return (1.0 - nf.s * r**2) ** nf.n
    if np.isscalar(r) or np.ndim(r) == 0:
        return nf.density(float(r))
    r = np.asarray(r)
    if np.ptp(r) == 0.0:
        return nf.density(float(r.flat[0]))
    raise DimensionUnsupportedError(
        "spatially varying cutoffs are supported for closed-form normal forms only"
    )


def _series_density_coeffs(nf, order=None):
    cache = getattr(nf, "_dens_coeffs", None)
    if cache is None:
        cache = {}
        nf._dens_coeffs = cache
    if order not in cache:
        cache[order] = nf.density_coefficients(order=order)
    return cache[order]


# ---------------------------------------------------------------------------
# expansion extraction


@dataclass
class EpsilonFit:
    n: int
    eps: np.ndarray
    samples: np.ndarray
    exponents: list
    has_log: bool
    coefficients: dict = field(default_factory=dict)
    V: float = 0.0
    L: float = None
    residual: float = 0.0
    condition: float = 0.0
    uncertainty: float = 0.0
    V_subtraction: float = None
    L_direct: float = None


def _basis_matrix(eps, exponents, has_log):
    cols = [eps**p for p in exponents]
    if has_log:
        cols.append(np.log(1.0 / eps))
    cols.append(np.ones_like(eps))
    return np.stack(cols, axis=-1)


def _qr_solve(A, b):
    """Least squares via modified Gram-Schmidt with reorthogonalization;
    works in whatever floating dtype A carries (LAPACK does not take
    extended precision)."""
    m, k = A.shape
    Q = np.zeros_like(A)
    R = np.zeros((k, k), dtype=A.dtype)
    for j in range(k):
        v = A[:, j].copy()
        for _ in range(2):
            for i in range(j):
                s = Q[:, i] @ v
                R[i, j] += s
                v -= s * Q[:, i]
        R[j, j] = np.sqrt(v @ v)
        Q[:, j] = v / R[j, j]
    y = Q.T @ b
    x = np.zeros(k, dtype=A.dtype)
    for i in range(k - 1, -1, -1):
        x[i] = (y[i] - R[i, i + 1 :] @ x[i + 1 :]) / R[i, i]
    return x


def _fit_expansion(eps, samples, n, extra_orders=0):
    """Least squares on the parity-correct power basis; ``extra_orders``
    appends further even positive powers for profiles whose expansion does
    not terminate at the constant term."""
    exponents = [j - n for j in range(0, 2 * n + extra_orders + 1, 2) if j != n]
    has_log = n % 2 == 0
    eps = np.asarray(eps, dtype=np.longdouble)
    b = np.asarray(samples, dtype=np.longdouble)
    A = _basis_matrix(eps, exponents, has_log)
    if A.shape[0] < A.shape[1]:
        raise FitDegeneracyError(
            f"{A.shape[0]} cutoff samples cannot determine {A.shape[1]} basis terms"
        )
    # weight rows to unit sample scale: the samples span many orders of
    # magnitude and the constant term would otherwise drown in rounding
    # of the divergent columns
    w = 1.0 / np.maximum(np.abs(b), 1.0)
    Aw = A * w[:, None]
    scale = np.sqrt(np.sum(Aw * Aw, axis=0))
    Aw = Aw / scale
    cond = np.linalg.cond(Aw.astype(float))
    if cond > _CONDITION_LIMIT:
        raise FitDegeneracyError(
            f"fit condition {cond:.2e} above threshold; widen the cutoff range"
        )
    coef = _qr_solve(Aw, b * w) / scale
    fitted = A @ coef
    residual = float(np.max(np.abs(fitted - b) / np.maximum(np.abs(b), 1.0)))
    names = [f"c{j}" for j in range(0, 2 * n + extra_orders + 1, 2) if j != n]
    coefficients = dict(zip(names, [float(c) for c in coef[: len(exponents)]]))
    L = float(coef[len(exponents)]) if has_log else None
    V = float(coef[-1])
    return exponents, has_log, coefficients, V, L, residual, float(cond)


def renormalized_volume(nf, eps_grid=None, gauge=None, r0=0.5) -> EpsilonFit:
    """Fit the cutoff-volume expansion and extract V (and L for n even),
    cross-checked by the subtraction route."""
    n = nf.n
    if eps_grid is None:
        eps_grid = default_eps_grid()
    samples = volume_profile(nf, eps_grid, gauge=gauge, r0=r0)
    exponents, has_log, coefficients, V, L, residual, cond = _fit_expansion(
        eps_grid, samples, n
    )
    # half-grid refit: the reported uncertainty
    try:
        _, _, _, V2, L2, _, _ = _fit_expansion(eps_grid[::2], samples[::2], n)
        unc = abs(V - V2) + (abs(L - L2) if has_log else 0.0)
    except FitDegeneracyError:
        # the thinned grid can be too ill-conditioned even when the full
        # one is fine; fall back on the fit residual as the uncertainty
        unc = residual * (1.0 + abs(V))
    fit = EpsilonFit(
        n=n,
        eps=eps_grid,
        samples=samples,
        exponents=exponents,
        has_log=has_log,
        coefficients=coefficients,
        V=V,
        L=L,
        residual=residual,
        condition=cond,
        uncertainty=unc,
    )
    if gauge is None:
        fit.V_subtraction = subtraction_volume(nf, r0=r0)
        if has_log:
            fit.L_direct = log_coefficient_direct(nf)
    return fit


def subtraction_volume(nf, r0=0.5, m=64):
    """V by subtracting the divergent part of the radial integrand
    analytically: the reference extraction route."""
    n = nf.n
    r0 = min(r0, nf.r_max)
    inner = _inner_constant(nf, r0)
    vs = _series_density_coeffs(nf, order=2 * n)
    dens0 = nf.family.volume_density(nf.grid.mesh())
    wx = nf.grid.weights() * dens0
    # the Taylor part through order 2n integrates in closed form; its
    # eps-independent contribution on (0, r0] is
    tail = np.zeros(nf.grid.shape)
    for j in range(0, 2 * n + 1, 2):
        if j == n:
            tail += vs[n] * math.log(r0)
        else:
            tail += vs[j] * r0 ** (j - n) / (j - n)
    if _poly_density_coeffs(nf) is not None:
        # density is exactly its Taylor polynomial: no remainder
        return inner + float(np.sum(wx * tail))
    # remainder r^{-n-1}(D - poly) = O(r^{n+1}); evaluating the difference
    # at tiny r loses all digits to cancellation, so start the quadrature
    # where the integrand is still negligible but representable
    a = r0 / 100.0
    t, wt = np.polynomial.legendre.leggauss(m)
    rs = a + 0.5 * (r0 - a) * (t + 1.0)
    ws = 0.5 * (r0 - a) * wt
    rem = np.zeros(nf.grid.shape)
    for r, w in zip(rs, ws):
        poly = np.zeros(nf.grid.shape)
        for j in range(0, 2 * n + 1, 2):
            poly += vs[j] * r**j
        rem += w * r ** (-n - 1.0) * (_density_at(nf, float(r)) - poly)
    return inner + float(np.sum(wx * (tail + rem)))


def log_coefficient_direct(nf):
    """L = integral of the order-n density coefficient (n even)."""
    if nf.n % 2 != 0:
        raise DimensionUnsupportedError("the log coefficient exists for even n")
    vs = _series_density_coeffs(nf)
    return integrate_scalar(vs[nf.n], nf.family, nf.grid)


def hyperbolic_reference(n):
    """Closed-form V (n odd) or L (n even) of hyperbolic space."""
    if n % 2 == 1:
        return (-1.0) ** ((n + 1) // 2) * math.pi ** ((n + 2) / 2.0) / math.gamma(
            (n + 2) / 2.0
        )
    m = n // 2
    return (-1.0) ** m * 2.0 * math.pi**m / math.factorial(m)


# ---------------------------------------------------------------------------
# the conformal anomaly


@dataclass
class AnomalyReport:
    n: int
    upsilon: object
    anomaly_integral: float
    V_g: float = None
    V_hat: float = None
    discrepancy: float = None


def anomaly_density(family, upsilon, x):
    """The printed local anomaly operator applied to Upsilon, pointwise."""
    n = family.n
    if n not in (2, 4):
        raise DimensionUnsupportedError("the anomaly operator is printed for n = 2 and 4")
    if not isinstance(upsilon, Upsilon):
        upsilon = Upsilon(upsilon, n)
    xf, base = _flatten(x, n)
    alg = _algebraic(family, xf)
    ginv = alg["ginv"]
    U = upsilon.value(xf)
    dU = upsilon.grad(xf)
    Uup = np.einsum("pij,pj->pi", ginv, dU)
    grad2 = np.einsum("pi,pi->p", dU, Uup)
    if n == 2:
        out = -0.25 * (alg["scalar"] * U + grad2)
        return out.reshape(base)
    # n = 4
    P = alg["schouten"]
    trP = np.einsum("pij,pij->p", ginv, P)
    hess = upsilon.hess(xf) - np.einsum("pmij,pm->pij", alg["gamma"], dU)
    v4 = closed_form_v(family, None, 4, pack=curvature_pack(family, xf, depth=2))
    term_hess = np.einsum("pij,pi,pj->p", hess, Uup, Uup)
    term_P = np.einsum("pij,pi,pj->p", P, Uup, Uup)
    out = (
        v4.reshape(-1) * U
        + term_hess
        - term_P
        - 0.25 * grad2**2
        + trP * grad2
    )
    return out.reshape(base)


def volume_anomaly(family, upsilon, nodes=None, eps_grid=None) -> AnomalyReport:
    """Integral of the anomaly density, and for sphere boundaries also the
    gauge-change difference V_hat - V_g computed from the region shift."""
    n = family.n
    if not isinstance(upsilon, Upsilon):
        upsilon = Upsilon(upsilon, n)
    grid = family.grid(nodes)
    x = grid.mesh()
    dens = anomaly_density(family, upsilon, x)
    integral = integrate_scalar(dens, family, grid)
    report = AnomalyReport(n=n, upsilon=upsilon, anomaly_integral=integral)
    if getattr(family, "kind", None) == "round-sphere":
        nf = HyperbolicNormalForm(family, grid)
        diff = gauge_volume_difference(nf, upsilon, eps_grid=eps_grid)
        report.V_g = renormalized_volume(nf).V
        report.V_hat = report.V_g + diff["V_hat_minus_V"]
        report.discrepancy = abs(diff["V_hat_minus_V"] - integral)
    return report


def gauge_volume_difference(nf, upsilon, eps_grid=None, m_radial=24):
    """Constant and log terms of Vol({rhat > eps}) - Vol({r > eps}).

    Integrating the volume element over the thin shell epshat < r < eps
    (signed) avoids the cancellation of the two large volumes.
    """
    n = nf.n
    if eps_grid is None:
        eps_grid = default_eps_grid()
    om = solve_special_defining(nf, upsilon, r_max=0.9 * nf.r_max)
    gm = change_of_gauge(om)
    dens0 = nf.family.volume_density(nf.grid.mesh())
    wx = nf.grid.weights() * dens0
    bs = _poly_density_coeffs(nf)
    deltas = np.empty(eps_grid.size)
    for k, eps in enumerate(eps_grid):
        ehat = gm.epshat(eps)
        # signed integral from eps to epshat(x), pointwise
        if bs is not None:
            shell = _laurent_shell(n, bs, eps, ehat)
        else:
            t, wt = np.polynomial.legendre.leggauss(m_radial)
            t = 0.5 * (t + 1.0)
            wt = 0.5 * wt
            span = ehat - eps
            shell = np.zeros(nf.grid.shape)
            for j in range(m_radial):
                r = eps + span * t[j]
                shell += wt[j] * span * r ** (-n - 1.0) * _density_at(nf, r)
        # Vol({rhat>eps}) - Vol({r>eps}) = -integral_eps^ehat
        deltas[k] = -float(np.sum(wx * shell))
    _, has_log, _, V, L, residual, _ = _fit_expansion(eps_grid, deltas, n)
    return {
        "V_hat_minus_V": V,
        "L_hat_minus_L": L if has_log else None,
        "samples": deltas,
        "residual": residual,
    }


# ---------------------------------------------------------------------------
# the L identities


def L_identity_sides(family, nodes=None):
    """(L_direct, L_identity): the coefficient integral and the printed
    curvature identity, for n in {2, 4, 6}."""
    n = family.n
    chi = family.euler_characteristic
    if n not in (2, 4, 6):
        raise DimensionUnsupportedError("L identities are printed for n = 2, 4, 6")
    if chi is None:
        raise DimensionUnsupportedError("Euler characteristic unknown for this family")
    grid = family.grid(nodes)
    x = grid.mesh()
    pack = curvature_pack(family, x, depth=4 if n >= 4 else 2)
    vn = closed_form_v(family, grid, n, pack=pack)
    L_direct = integrate_scalar(vn, family, grid)
    if n == 2:
        L_id = -math.pi * chi
    elif n == 4:
        W = pack.require("weyl")
        ginv = pack.inverse
        w2 = _weyl_norm2(ginv, W)
        L_id = 0.5 * math.pi**2 * chi - integrate_scalar(w2, family, grid) / 64.0
    else:
        inv = conformal_invariants_6d(family, x)
        L_id = -(math.pi**3) / 6.0 * chi + integrate_scalar(inv["J"], family, grid) / 2304.0
    return L_direct, L_id


def L_identity_homogeneous(family, total_volume, nodes=None, axes=None, ptp_tol=1e-6):
    """(L_direct, L_identity) for a homogeneous family.

    The integrands are constant on a homogeneous space, so evaluating at a
    few generic chart points and scaling by the known total volume replaces
    full quadrature. This matters for n = 6, where the depth-4 curvature
    stack is expensive and loses accuracy near chart degeneracies; the
    sample axes should stay away from those.
    """
    n = family.n
    chi = family.euler_characteristic
    if n not in (2, 4, 6):
        raise DimensionUnsupportedError("L identities are printed for n = 2, 4, 6")
    grid = family.grid(nodes, axes=axes)
    x = grid.mesh()
    pack = curvature_pack(family, x, depth=4 if n >= 4 else 2)
    vn = closed_form_v(family, grid, n, pack=pack)
    mean = float(np.mean(vn))
    if float(np.ptp(vn)) > ptp_tol * (1.0 + abs(mean)):
        raise ResolutionError("sampled integrand is not constant: family not homogeneous here")
    L_direct = mean * total_volume
    if n == 2:
        L_id = -math.pi * chi
    elif n == 4:
        w2 = _weyl_norm2(pack.inverse, pack.require("weyl"))
        L_id = 0.5 * math.pi**2 * chi - float(np.mean(w2)) * total_volume / 64.0
    else:
        J = conformal_invariants_6d(family, x)["J"]
        L_id = -(math.pi**3) / 6.0 * chi + float(np.mean(J)) * total_volume / 2304.0
    return L_direct, L_id


def _weyl_norm2(ginv, W):
    Wup = np.einsum(
        "...ia,...jb,...kc,...ld,...abcd->...ijkl", ginv, ginv, ginv, ginv, W
    )
    return np.einsum("...ijkl,...ijkl->...", Wup, W)
