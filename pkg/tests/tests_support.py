"""Shared grid helpers for the test suite."""

import numpy as np

from renvol.families import AxisSpec


def hopf_band_grid(fam, m=18, dtype=np.longdouble):
    """Pole-free band of the torus-adapted sphere chart; the other angles
    are symmetry directions and carry a single node."""
    axes = [AxisSpec("gl", 0.6, 0.97)] + list(fam.chart_axes[1:])
    return fam.grid((m, 1, 1), axes=axes, dtype=dtype)
