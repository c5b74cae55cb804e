"""Pointwise curvature of boundary metrics: Riemann through Bach, plus the
dimension-six invariants and the four-dimensional Gauss-Bonnet check.

First and second metric partials are analytic (supplied by the family);
third and fourth partials enter only through Richardson-extrapolated
central differences of the analytic Schouten/Weyl evaluators.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import DimensionUnsupportedError, SingularMetricError
from .families import integrate_scalar, richardson_gradient, richardson_hessian


def _inverse_metric(g):
    det = np.linalg.det(g)
    if not np.all(np.isfinite(det)) or np.any(det <= 0.0):
        raise SingularMetricError("metric is singular or not positive definite")
    return np.linalg.inv(g)


def _flatten(x, n):
    x = np.asarray(x, dtype=float)
    base = x.shape[:-1]
    return x.reshape(-1, n), base


def christoffel(ginv, dg):
    return backend.christoffel_batch(ginv, dg)


def dchristoffel(ginv, dg, d2g):
    """partial_l Gamma^m_ij, shape (N, l, m, i, j)."""
    # sym[p, i, j, q] = d_i g_jq + d_j g_iq - d_q g_ij  and its l-partial
    sym = dg + dg.transpose(0, 2, 1, 3) - dg.transpose(0, 2, 3, 1)
    dsym = (
        d2g.transpose(0, 1, 2, 3, 4)
        + d2g.transpose(0, 1, 3, 2, 4)
        - d2g.transpose(0, 1, 3, 4, 2)
    )
    # d2g[p, l, k, i, j] = d_l d_k g_ij; dsym[p, l, i, j, q] = d_l sym[i, j, q]
    dginv = -np.einsum("pma,plab,pbq->plmq", ginv, dg, ginv)
    return 0.5 * (
        np.einsum("plmq,pijq->plmij", dginv, sym)
        + np.einsum("pmq,plijq->plmij", ginv, dsym)
    )


def riemann_lower(g, dg, d2g, gamma):
    return backend.riemann_batch(g, dg, d2g, gamma)


def _algebraic(family, xf):
    """Curvature pieces needing only analytic partials, at flat points xf."""
    n = family.n
    g = family.metric(xf)
    ginv = _inverse_metric(g)
    dg = family.dmetric(xf)
    d2g = family.d2metric(xf)
    gamma = christoffel(ginv, dg)
    riem = riemann_lower(g, dg, d2g, gamma)
    ric = np.einsum("pik,pijkl->pjl", ginv, riem)
    scal = np.einsum("pij,pij->p", ginv, ric)
    out = {
        "g": g,
        "ginv": ginv,
        "dg": dg,
        "d2g": d2g,
        "gamma": gamma,
        "riemann": riem,
        "ricci": ric,
        "scalar": scal,
    }
    if n >= 3:
        P = (ric - scal[:, None, None] / (2.0 * (n - 1)) * g) / (n - 2)
        kulkarni = (
            np.einsum("pik,pjl->pijkl", P, g)
            + np.einsum("pjl,pik->pijkl", P, g)
            - np.einsum("pil,pjk->pijkl", P, g)
            - np.einsum("pjk,pil->pijkl", P, g)
        )
        out["schouten"] = P
        out["weyl"] = riem - kulkarni
    return out


def _schouten_map(family):
    def f(y):
        return _algebraic(family, y)["schouten"]

    return f


def _weyl_map(family):
    def f(y):
        return _algebraic(family, y)["weyl"]

    return f


@dataclass
class CurvaturePack:
    """All pointwise curvature quantities of a boundary metric.

    Quantities undefined at the given dimension are None; use require()
    to get a hard error instead.
    """

    n: int
    metric: np.ndarray
    inverse: np.ndarray
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: np.ndarray
    schouten: np.ndarray = None
    weyl: np.ndarray = None
    cotton: np.ndarray = None
    bach: np.ndarray = None

    def require(self, name):
        val = getattr(self, name)
        if val is None:
            raise DimensionUnsupportedError(
                f"{name} is not defined/computed for dimension n={self.n}"
            )
        return val


def _cov_deriv_P(alg, dP):
    """nabla_k P_ij from coordinate partials dP[p, k, i, j]."""
    gamma = alg["gamma"]
    P = alg["schouten"]
    return (
        dP
        - np.einsum("pmki,pmj->pkij", gamma, P)
        - np.einsum("pmkj,pim->pkij", gamma, P)
    )


def curvature_pack(family, x, depth=None):
    """Curvature quantities at the points x (shape (..., n)).

    depth limits the highest derivative order used: 2 stops at Weyl,
    3 adds Cotton, 4 adds Bach.  Default is everything the dimension
    supports.
    """
    n = family.n
    if n < 2:
        raise DimensionUnsupportedError("curvature requires n >= 2")
    if depth is None:
        depth = 4 if n >= 4 else (3 if n >= 3 else 2)
    xf, base = _flatten(x, n)
    alg = _algebraic(family, xf)
    pack = CurvaturePack(
        n=n,
        metric=alg["g"],
        inverse=alg["ginv"],
        riemann=alg["riemann"],
        ricci=alg["ricci"],
        scalar=alg["scalar"],
        schouten=alg.get("schouten"),
        weyl=alg.get("weyl"),
    )
    if n >= 3 and depth >= 3:
        dP = richardson_gradient(_schouten_map(family), xf)
        covP = _cov_deriv_P(alg, dP)
        # C_ijk = nabla_k P_ij - nabla_j P_ik
        pack.cotton = covP.transpose(0, 2, 3, 1) - covP.transpose(0, 2, 1, 3)
    if n >= 4 and depth >= 4:
        pack.bach = _bach(family, xf, alg)

    def unflat(a):
        return None if a is None else a.reshape(base + a.shape[1:])

    for name in ("metric", "inverse", "riemann", "ricci", "schouten", "weyl", "cotton", "bach"):
        setattr(pack, name, unflat(getattr(pack, name)))
    pack.scalar = pack.scalar.reshape(base)
    return pack


def _second_cov_deriv_P(family, xf, alg):
    """nabla_l nabla_k P_ij, shape (N, l, k, i, j)."""
    gamma = alg["gamma"]
    dgamma = dchristoffel(alg["ginv"], alg["dg"], alg["d2g"])
    P = alg["schouten"]
    dP = richardson_gradient(_schouten_map(family), xf)
    d2P = richardson_hessian(_schouten_map(family), xf)
    covP = _cov_deriv_P(alg, dP)
    # coordinate partial of T_kij = nabla_k P_ij
    dT = (
        d2P
        - np.einsum("plmki,pmj->plkij", dgamma, P)
        - np.einsum("pmki,plmj->plkij", gamma, dP)
        - np.einsum("plmkj,pim->plkij", dgamma, P)
        - np.einsum("pmkj,plim->plkij", gamma, dP)
    )
    return (
        dT
        - np.einsum("pmlk,pmij->plkij", gamma, covP)
        - np.einsum("pmli,pkmj->plkij", gamma, covP)
        - np.einsum("pmlj,pkim->plkij", gamma, covP)
    )


def _bach(family, xf, alg):
    ginv = alg["ginv"]
    P = alg["schouten"]
    W = alg["weyl"]
    ddP = _second_cov_deriv_P(family, xf, alg)
    lap = np.einsum("pkl,plkij->pij", ginv, ddP)
    # g^{kl} nabla_l nabla_j P_ik
    mixed = np.einsum("pkl,pljik->pij", ginv, ddP)
    Pup = np.einsum("pka,plb,pab->pkl", ginv, ginv, P)
    return lap - mixed - np.einsum("pkl,pkijl->pij", Pup, W)


# ---------------------------------------------------------------------------
# dimension-six conformal invariants


def _raise_all(ginv, T):
    """Raise every index of a fully covariant tensor."""
    out = T
    for axis in range(1, T.ndim):
        out = np.moveaxis(np.einsum("pab,p...b->p...a", ginv, np.moveaxis(out, axis, -1)), -1, axis)
    return out


def _norm2(ginv, T):
    axes = tuple(range(1, T.ndim))
    return np.einsum(_raise_all(ginv, T), [0] + list(axes), T, [0] + list(axes), [0])


def conformal_invariants_6d(family, x):
    """Cotton C, the Weyl-derivative tensors V and U, and the scalar
    invariants I and J built from them."""
    n = family.n
    if n < 3:
        raise DimensionUnsupportedError("conformal invariants require n >= 3")
    xf, base = _flatten(x, n)
    alg = _algebraic(family, xf)
    g = alg["g"]
    ginv = alg["ginv"]
    gamma = alg["gamma"]
    P = alg["schouten"]
    W = alg["weyl"]

    covP = _cov_deriv_P(alg, richardson_gradient(_schouten_map(family), xf))
    C = covP.transpose(0, 2, 3, 1) - covP.transpose(0, 2, 1, 3)

    # nabla_m W_ijkl
    dW = richardson_gradient(_weyl_map(family), xf)
    covW = (
        dW
        - np.einsum("pami,pajkl->pmijkl", gamma, W)
        - np.einsum("pamj,piakl->pmijkl", gamma, W)
        - np.einsum("pamk,pijal->pmijkl", gamma, W)
        - np.einsum("paml,pijka->pmijkl", gamma, W)
    )
    V = (
        covW.transpose(0, 2, 3, 4, 5, 1)
        + np.einsum("pim,pjkl->pijklm", g, C)
        - np.einsum("pjm,pikl->pijklm", g, C)
        + np.einsum("pkm,plij->pijklm", g, C)
        - np.einsum("plm,pkij->pijklm", g, C)
    )

    # nabla_i C_jkl from second covariant derivatives of P:
    # C_jkl = nabla_l P_jk - nabla_k P_jl
    ddP = _second_cov_deriv_P(family, xf, alg)
    covC = ddP.transpose(0, 1, 3, 4, 2) - ddP.transpose(0, 1, 3, 2, 4)
    U = covC - np.einsum("pam,pia,pmjkl->pijkl", ginv, P, W)

    Wup = _raise_all(ginv, W)
    I = _norm2(ginv, V) - 16.0 * np.einsum("pijkl,pijkl->p", Wup, U) + 16.0 * _norm2(ginv, C)

    # J = -3 I + 7 W_ijkl W^{ij}_{pq} W^{klpq} + 4 W_ijkl W^{ipkq} W^j_p^l_q
    Wud = np.einsum("pia,pjb,pabkl->pijkl", ginv, ginv, W)  # W^{ij}_{kl}
    term7 = np.einsum("pijkl,pijab,pklab->p", W, Wud, Wup)
    Wmix = np.einsum("pjm,pln,pmanb->pjalb", ginv, ginv, W)  # W^j_a^l_b
    term4 = np.einsum("pijkl,piakb,pjalb->p", W, Wup, Wmix)
    J = -3.0 * I + 7.0 * term7 + 4.0 * term4

    return {
        "cotton": C.reshape(base + C.shape[1:]),
        "V": V.reshape(base + V.shape[1:]),
        "U": U.reshape(base + U.shape[1:]),
        "I": I.reshape(base),
        "J": J.reshape(base),
    }


def gauss_bonnet_sides(family, grid=None):
    """Both sides of the four-dimensional Gauss-Bonnet identity."""
    if family.n != 4:
        raise DimensionUnsupportedError("Gauss-Bonnet identity implemented for n = 4")
    chi = family.euler_characteristic
    if chi is None:
        raise DimensionUnsupportedError("Euler characteristic unknown for this family")
    if grid is None:
        grid = family.grid()
    x = grid.mesh()
    xf, base = _flatten(x, 4)
    alg = _algebraic(family, xf)
    ginv = alg["ginv"]
    P = alg["schouten"]
    W = alg["weyl"]
    w2 = _norm2(ginv, W)
    p2 = _norm2(ginv, P)
    trP = np.einsum("pij,pij->p", ginv, P)
    integrand = (w2 - 8.0 * p2 + 8.0 * trP**2).reshape(base)
    lhs = 32.0 * np.pi**2 * chi
    rhs = integrate_scalar(integrand, family, grid)
    return lhs, rhs
