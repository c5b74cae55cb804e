"""NumPy reference implementation of the pointwise curvature kernels.

Same contracts as the compiled module; selected automatically when the
extension is unavailable or RENVOL_BACKEND=python is set.
"""

import numpy as np


def christoffel_batch(ginv, dg):
    """Christoffel symbols Gamma^l_ij for a batch of points.

    ginv: (N, n, n) inverse metric; dg: (N, n, n, n) with dg[p, k, i, j]
    = partial_k g_ij.  Returns (N, n, n, n) indexed [p, l, i, j].
    """
    # sym[p, i, j, m] = d_i g_jm + d_j g_im - d_m g_ij
    sym = dg + dg.transpose(0, 2, 1, 3) - dg.transpose(0, 2, 3, 1)
    return 0.5 * np.einsum("plm,pijm->plij", ginv, sym)


def riemann_batch(g, dg, d2g, gamma):
    """Riemann tensor with all indices lowered, R[p, i, j, k, l].

    d2g[p, k, l, i, j] = partial_k partial_l g_ij.  Convention fixed so
    that a constant-curvature metric gives R_ijkl = c (g_ik g_jl - g_il g_jk).
    """
    term = 0.5 * (
        np.einsum("pjkil->pijkl", d2g)
        + np.einsum("piljk->pijkl", d2g)
        - np.einsum("pjlik->pijkl", d2g)
        - np.einsum("pikjl->pijkl", d2g)
    )
    quad = np.einsum("pmq,pmjk,pqil->pijkl", g, gamma, gamma) - np.einsum(
        "pmq,pmjl,pqik->pijkl", g, gamma, gamma
    )
    return term + quad
