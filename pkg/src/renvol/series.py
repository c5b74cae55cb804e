"""Truncated power series in the radial variable with ndarray coefficients.

Coefficients may carry arbitrary trailing tensor axes (matrix-valued
series live here too).  Truncation bookkeeping is exact: an operation's
result order is the least order through which it is formally known.
"""

from __future__ import annotations

import numpy as np

from .errors import InsufficientOrderError


def _refined_inverse(a):
    """Matrix inverse that tolerates extended-precision dtypes: LAPACK in
    double, then Newton steps to recover the extra digits."""
    if a.dtype == np.float64:
        return np.linalg.inv(a)
    inv = np.linalg.inv(a.astype(np.float64)).astype(a.dtype)
    eye = np.eye(a.shape[-1], dtype=a.dtype)
    for _ in range(2):
        inv = inv @ (2.0 * eye - a @ inv)
    return inv


class TruncSeries:
    """sum_j c_j r^j known through r^order; coefficients are ndarrays of a
    common shape."""

    def __init__(self, coeffs, order=None):
        coeffs = [np.asarray(c) for c in coeffs]
        if order is None:
            order = len(coeffs) - 1
        if order < 0:
            raise InsufficientOrderError("series truncated below order 0")
        shape = coeffs[0].shape if coeffs else ()
        # inexact dtype preserved so extended-precision pipelines stay so
        dtype = np.result_type(float, *[c.dtype for c in coeffs]) if coeffs else float
        full = []
        for j in range(order + 1):
            c = coeffs[j] if j < len(coeffs) else np.zeros(shape, dtype)
            full.append(np.broadcast_to(c, shape).astype(dtype))
        self.coeffs = full
        self.order = order

    # -- basics ----------------------------------------------------------
    @property
    def shape(self):
        return self.coeffs[0].shape

    def coeff(self, j):
        if j > self.order:
            raise InsufficientOrderError(f"coefficient r^{j} beyond truncation {self.order}")
        return self.coeffs[j]

    def truncate(self, order):
        if order > self.order:
            raise InsufficientOrderError("cannot extend a truncated series")
        return TruncSeries(self.coeffs[: order + 1], order)

    def map(self, fn):
        """Apply fn to every coefficient (e.g. a spatial derivative)."""
        return TruncSeries([fn(c) for c in self.coeffs], self.order)

    def __add__(self, other):
        m = min(self.order, other.order)
        return TruncSeries([self.coeffs[j] + other.coeffs[j] for j in range(m + 1)], m)

    def __sub__(self, other):
        m = min(self.order, other.order)
        return TruncSeries([self.coeffs[j] - other.coeffs[j] for j in range(m + 1)], m)

    def __neg__(self):
        return TruncSeries([-c for c in self.coeffs], self.order)

    def scaled(self, a):
        return TruncSeries([a * c for c in self.coeffs], self.order)

    def shift(self, p=1):
        """Multiply by r^p."""
        shape = self.shape
        return TruncSeries([np.zeros(shape)] * p + self.coeffs, self.order + p)

    def deriv(self):
        if self.order == 0:
            return TruncSeries([np.zeros(self.shape)], 0)
        return TruncSeries(
            [(j + 1) * self.coeffs[j + 1] for j in range(self.order)], self.order - 1
        )

    def integrate(self):
        """Antiderivative with zero constant term."""
        out = [np.zeros(self.shape)]
        out += [self.coeffs[j] / (j + 1) for j in range(self.order + 1)]
        return TruncSeries(out, self.order + 1)

    def eval(self, r):
        """Evaluate by Horner's rule; r broadcasts against coefficients."""
        r = np.asarray(r, dtype=float)
        rb = r[(...,) + (None,) * len(self.shape)] if self.shape else r
        out = np.broadcast_to(self.coeffs[-1], np.broadcast_shapes(rb.shape, self.shape)).copy()
        for c in reversed(self.coeffs[:-1]):
            out = out * rb + c
        return out

    # -- products --------------------------------------------------------
    def trace_last2(self):
        return TruncSeries([np.trace(c, axis1=-2, axis2=-1) for c in self.coeffs], self.order)

    def matinv(self):
        """Inverse of a matrix-valued series (trailing two axes)."""
        inv0 = _refined_inverse(self.coeffs[0])
        out = [inv0]
        for k in range(1, self.order + 1):
            acc = np.zeros_like(self.coeffs[0])
            for j in range(1, k + 1):
                acc = acc + self.coeffs[j] @ out[k - j]
            out.append(-inv0 @ acc)
        return TruncSeries(out, self.order)

    def exp(self):
        """exp of a scalar-valued series."""
        e0 = np.exp(self.coeffs[0])
        out = [e0]
        for k in range(1, self.order + 1):
            acc = np.zeros_like(e0)
            for j in range(1, k + 1):
                acc = acc + j * self.coeffs[j] * out[k - j]
            out.append(acc / k)
        return TruncSeries(out, self.order)


def series_einsum(spec, a: TruncSeries, b: TruncSeries):
    """Cauchy product of two series contracted with an einsum spec."""
    m = min(a.order, b.order)
    out = []
    for k in range(m + 1):
        acc = None
        for j in range(k + 1):
            term = np.einsum(spec, a.coeffs[j], b.coeffs[k - j])
            acc = term if acc is None else acc + term
        out.append(acc)
    return TruncSeries(out, m)
