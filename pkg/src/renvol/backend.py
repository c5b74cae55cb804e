"""Kernel backend selection.

The compiled Cython extension is preferred when importable; the NumPy
reference implementation is the fallback.  RENVOL_BACKEND=python forces
the fallback (useful for the benchmark and for parity tests).
"""

import os

from . import _curvref

if os.environ.get("RENVOL_BACKEND", "").lower() == "python":
    _impl = _curvref
    BACKEND = "python"
else:
    try:
        from . import _curvkernel as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = _curvref
        BACKEND = "python"


def christoffel_batch(ginv, dg):
    import numpy as np

    return np.asarray(
        _impl.christoffel_batch(np.ascontiguousarray(ginv), np.ascontiguousarray(dg))
    )


def riemann_batch(g, dg, d2g, gamma):
    import numpy as np

    return np.asarray(
        _impl.riemann_batch(
            np.ascontiguousarray(g),
            np.ascontiguousarray(dg),
            np.ascontiguousarray(d2g),
            np.ascontiguousarray(gamma),
        )
    )
