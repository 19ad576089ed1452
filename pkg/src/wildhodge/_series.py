"""Truncated matrix-valued Laurent series in one variable.

Coefficients are stored densely from `min_order` upward; every operation
truncates at a caller-supplied maximum order. Truncation is consistent for the
uses in this package: products of series whose factors have min_order >= 0
never need discarded coefficients to produce the retained ones, so retained
coefficients are exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class MatSeries:
    """sum_j coeffs[j - min_order] * z^j with matrix coefficients."""

    min_order: int
    coeffs: np.ndarray  # shape (orders, r, r), complex

    @property
    def max_order(self) -> int:
        return self.min_order + self.coeffs.shape[0] - 1

    @property
    def rank(self) -> int:
        return self.coeffs.shape[1]

    def coeff(self, j: int) -> np.ndarray:
        if self.min_order <= j <= self.max_order:
            return self.coeffs[j - self.min_order]
        return np.zeros((self.rank, self.rank), dtype=complex)

    def truncate(self, nmax: int) -> "MatSeries":
        if self.max_order <= nmax:
            return self
        keep = nmax - self.min_order + 1
        if keep <= 0:
            return MatSeries(nmax, np.zeros((1, self.rank, self.rank), dtype=complex))
        return MatSeries(self.min_order, self.coeffs[:keep].copy())

    def __add__(self, other: "MatSeries") -> "MatSeries":
        lo = min(self.min_order, other.min_order)
        hi = max(self.max_order, other.max_order)
        r = self.rank
        out = np.zeros((hi - lo + 1, r, r), dtype=complex)
        out[self.min_order - lo : self.max_order - lo + 1] += self.coeffs
        out[other.min_order - lo : other.max_order - lo + 1] += other.coeffs
        return MatSeries(lo, out)

    def __sub__(self, other: "MatSeries") -> "MatSeries":
        return self + other.scale(-1.0)

    def scale(self, c: complex) -> "MatSeries":
        return MatSeries(self.min_order, c * self.coeffs)

    def mul(self, other: "MatSeries", nmax: int) -> "MatSeries":
        """Matrix product of series, truncated at order nmax."""
        lo = self.min_order + other.min_order
        if lo > nmax:
            return MatSeries(nmax, np.zeros((1, self.rank, self.rank), dtype=complex))
        out = np.zeros((nmax - lo + 1, self.rank, self.rank), dtype=complex)
        for i, a in enumerate(self.coeffs):
            ja = self.min_order + i
            if ja + other.min_order > nmax:
                break
            jb_hi = min(other.max_order, nmax - ja)
            nb = jb_hi - other.min_order + 1
            if nb <= 0:
                continue
            # out[ja + jb] += a @ b[jb] for each retained jb
            out[ja + other.min_order - lo : ja + jb_hi - lo + 1] += np.einsum(
                "ab,jbc->jac", a, other.coeffs[:nb]
            )
        return MatSeries(lo, out)

    def dz(self) -> "MatSeries":
        """Derivative d/dz; the z^0 coefficient drops out."""
        orders = np.arange(self.min_order, self.max_order + 1)
        out = orders[:, None, None] * self.coeffs
        return MatSeries(self.min_order - 1, out)

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max()) if self.coeffs.size else 0.0


def identity_series(rank: int) -> MatSeries:
    return MatSeries(0, np.eye(rank, dtype=complex)[None, :, :])


def from_coeff(j: int, mat: np.ndarray) -> MatSeries:
    mat = np.asarray(mat, dtype=complex)
    return MatSeries(j, mat[None, :, :])


def exp_series(u: MatSeries, nmax: int) -> MatSeries:
    """exp(u) truncated at nmax; requires min_order(u) >= 1 so the sum is finite."""
    if u.min_order < 1:
        raise ValueError("exp_series needs a series with positive valuation")
    r = u.rank
    acc = identity_series(r)
    term = identity_series(r)
    kmax = nmax // u.min_order
    for k in range(1, kmax + 1):
        term = term.mul(u, nmax).scale(1.0 / k)
        acc = acc + term
    return acc.truncate(nmax)


def log_series(g: MatSeries, nmax: int) -> MatSeries:
    """log(g) for g = 1 + h with valuation(h) >= 1, truncated at nmax."""
    r = g.rank
    h = g - identity_series(r)
    h = h.truncate(nmax)
    if h.min_order < 1 and h.max_abs() > 0.0:
        low = h.coeffs[: max(0, 1 - h.min_order)]
        if low.size and np.abs(low).max() > 0.0:
            raise ValueError("log_series needs g = 1 + O(z)")
    acc = MatSeries(1, np.zeros((max(nmax, 1), r, r), dtype=complex))
    power = identity_series(r)
    kmax = max(nmax, 0)
    sign = 1.0
    for k in range(1, kmax + 1):
        power = power.mul(h, nmax)
        acc = acc + power.scale(sign / k)
        sign = -sign
    return acc.truncate(nmax)


def gauge_action(u: MatSeries, a: MatSeries, nmax: int) -> MatSeries:
    """Connection-form transform g a g^{-1} - (dg) g^{-1} for g = exp(u)."""
    g = exp_series(u, nmax)
    ginv = exp_series(u.scale(-1.0), nmax)
    conj = g.mul(a, nmax).mul(ginv, nmax)
    deriv = g.dz().mul(ginv, nmax)
    return (conj - deriv).truncate(nmax)


def conjugate_series(u: MatSeries, a: MatSeries, nmax: int) -> MatSeries:
    """Plain conjugation g a g^{-1} for g = exp(u); how a Higgs field moves."""
    g = exp_series(u, nmax)
    ginv = exp_series(u.scale(-1.0), nmax)
    return g.mul(a, nmax).mul(ginv, nmax).truncate(nmax)
