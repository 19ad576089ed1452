"""Puncture-local polar data, the entrywise level decomposition, and formal
normalization of a connection's polar part.

Conventions: a connection near the puncture z = 0 is d + sum_j C_j z^j dz with
the polar block C_{-n}..C_{-1}; model data stores the diagonal coefficients as
A_i = C_{-i}, so A_1 is the residue. A polynomial gauge g = exp(u(z)) with
u(0) = 0 acts on the coefficient series by A -> g A g^{-1} - (dg) g^{-1}.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._series import MatSeries, exp_series, from_coeff, gauge_action, identity_series, log_series
from .errors import InputError, NonSemisimpleLeading, TruncationTooShort


@dataclass(frozen=True)
class DiagonalMatrix:
    """Diagonal matrix stored by its diagonal entries."""

    entries: tuple

    def __post_init__(self):
        entries = tuple(complex(e) for e in self.entries)
        if not entries:
            raise InputError("DiagonalMatrix needs at least one entry")
        object.__setattr__(self, "entries", entries)

    @property
    def rank(self) -> int:
        return len(self.entries)

    def vector(self) -> np.ndarray:
        return np.array(self.entries, dtype=complex)

    def matrix(self) -> np.ndarray:
        return np.diag(self.vector())


@dataclass(frozen=True)
class PuncturePolarData:
    """Connection-side local data: diagonal polar coefficients and weights.

    coeffs lists A_1..A_n (residue first); weights are the parabolic weights
    beta_1..beta_r, each in [0, 1). The residue eigenvalues mu_i are the
    entries of A_1.
    """

    rank: int
    order: int
    coeffs: tuple
    weights: tuple

    def __post_init__(self):
        if self.rank < 1:
            raise InputError("rank must be positive")
        if self.order < 1:
            raise InputError("pole order must be positive")
        coeffs = tuple(
            c if isinstance(c, DiagonalMatrix) else DiagonalMatrix(tuple(c))
            for c in self.coeffs
        )
        if len(coeffs) != self.order:
            raise InputError(f"expected {self.order} coefficient matrices, got {len(coeffs)}")
        for c in coeffs:
            if c.rank != self.rank:
                raise InputError("coefficient size does not match rank")
        weights = tuple(float(w) for w in self.weights)
        if len(weights) != self.rank:
            raise InputError("need one weight per basis direction")
        for w in weights:
            if not 0.0 <= w < 1.0:
                raise InputError(f"weight {w} outside [0, 1)")
        object.__setattr__(self, "coeffs", coeffs)
        object.__setattr__(self, "weights", weights)

    def coeff(self, i: int) -> DiagonalMatrix:
        """A_i for 1 <= i <= order."""
        if not 1 <= i <= self.order:
            raise InputError(f"no coefficient A_{i}")
        return self.coeffs[i - 1]

    @property
    def mu(self) -> np.ndarray:
        """Residue eigenvalues, the entries of A_1."""
        return self.coeffs[0].vector()

    @property
    def beta(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)


def zero_polar_data(rank: int, order: int = 1) -> PuncturePolarData:
    zero = DiagonalMatrix((0.0,) * rank)
    return PuncturePolarData(rank, order, (zero,) * order, (0.0,) * rank)


@dataclass(frozen=True, eq=False)
class FormalConnection:
    """Formal series sum C_j z^j dz, j = -order..trunc, full matrices."""

    rank: int
    order: int
    trunc: int
    coeffs: np.ndarray

    def __post_init__(self):
        if self.rank < 1:
            raise InputError("rank must be positive")
        if self.order < 1:
            raise InputError("pole order must be positive")
        if self.trunc < 0:
            raise InputError("truncation order must be nonnegative")
        coeffs = np.asarray(self.coeffs, dtype=complex)
        want = (self.order + self.trunc + 1, self.rank, self.rank)
        if coeffs.shape != want:
            raise InputError(f"coefficient array shape {coeffs.shape}, expected {want}")
        object.__setattr__(self, "coeffs", coeffs)

    def coeff(self, j: int) -> np.ndarray:
        """Coefficient of z^j dz."""
        if not -self.order <= j <= self.trunc:
            return np.zeros((self.rank, self.rank), dtype=complex)
        return self.coeffs[j + self.order]

    def to_series(self) -> MatSeries:
        return MatSeries(-self.order, self.coeffs.copy())

    @classmethod
    def from_series(cls, s: MatSeries, order: int, trunc: int) -> "FormalConnection":
        r = s.rank
        out = np.zeros((order + trunc + 1, r, r), dtype=complex)
        for j in range(-order, trunc + 1):
            out[j + order] = s.coeff(j)
        return cls(r, order, trunc, out)

    @classmethod
    def from_polar(cls, data: PuncturePolarData, trunc: int = 0) -> "FormalConnection":
        """Diagonal series with C_{-i} = A_i and zero holomorphic tail."""
        r, n = data.rank, data.order
        out = np.zeros((n + trunc + 1, r, r), dtype=complex)
        for i in range(1, n + 1):
            out[n - i] = data.coeff(i).matrix()
        return cls(r, n, trunc, out)


@dataclass(frozen=True, eq=False)
class FormalGauge:
    """Polynomial gauge u(z) = u_0 + u_1 z + ... + u_N z^N; g = exp(u)."""

    rank: int
    trunc: int
    coeffs: np.ndarray
    fix_origin: bool = True

    def __post_init__(self):
        coeffs = np.asarray(self.coeffs, dtype=complex)
        want = (self.trunc + 1, self.rank, self.rank)
        if coeffs.shape != want:
            raise InputError(f"gauge coefficient shape {coeffs.shape}, expected {want}")
        if self.fix_origin and np.abs(coeffs[0]).max() != 0.0:
            raise InputError("fix_origin gauge must satisfy u(0) = 0")
        object.__setattr__(self, "coeffs", coeffs)

    def coeff(self, j: int) -> np.ndarray:
        if not 0 <= j <= self.trunc:
            return np.zeros((self.rank, self.rank), dtype=complex)
        return self.coeffs[j]

    def to_series(self) -> MatSeries:
        return MatSeries(0, self.coeffs.copy())

    def max_abs(self) -> float:
        return float(np.abs(self.coeffs).max())


@dataclass(frozen=True, eq=False)
class LevelDecomposition:
    """Entrywise level map of End(E) and per-level spectral gaps.

    level[a, b] = largest i with (A_i)_aa != (A_i)_bb, or 0 when every
    coefficient agrees at (a, b). min_gap[k] is the smallest |(A_k)_aa -
    (A_k)_bb| over entries of level exactly k.
    """

    level: np.ndarray
    min_gap: dict = field(default_factory=dict)

    def __post_init__(self):
        level = np.asarray(self.level, dtype=int)
        if level.ndim != 2 or level.shape[0] != level.shape[1]:
            raise InputError("level must be a square integer matrix")
        object.__setattr__(self, "level", level)

    @property
    def rank(self) -> int:
        return self.level.shape[0]

    def occurring(self) -> list:
        ks = sorted(set(self.level[np.triu_indices(self.rank, k=1)].tolist()))
        return [k for k in ks if k >= 1]


def end_levels(data: PuncturePolarData) -> LevelDecomposition:
    """Entrywise level decomposition from exact coefficient comparisons."""
    r, n = data.rank, data.order
    cols = np.stack([data.coeff(i).vector() for i in range(1, n + 1)])
    level = np.zeros((r, r), dtype=int)
    for a in range(r):
        for b in range(r):
            if a == b:
                continue
            differs = np.nonzero(cols[:, a] != cols[:, b])[0]
            level[a, b] = int(differs.max()) + 1 if differs.size else 0
    min_gap: dict = {}
    for k in range(1, n + 1):
        mask = level == k
        if not mask.any():
            continue
        diffs = np.abs(cols[k - 1][:, None] - cols[k - 1][None, :])
        min_gap[k] = float(diffs[mask].min())
    return LevelDecomposition(level, min_gap)


@dataclass(frozen=True, eq=False)
class PolarNormalForm:
    """Result of normalize_polar, expressed in the diagonalizing basis.

    connection holds the transformed series; its polar coefficients commute
    with the leading diagonal (block-diagonal along eigenvalue clusters, plain
    diagonal when the leading term is regular). basis columns give the
    constant change of basis applied before the polynomial gauge; residual is
    the largest leftover off-kernel polar entry.
    """

    connection: FormalConnection
    basis: np.ndarray
    leading: np.ndarray
    residual: float

    def to_puncture_data(self, weights=None, atol: float = 1e-9) -> PuncturePolarData:
        """Read off diagonal polar data; requires the polar part diagonal."""
        conn = self.connection
        r, n = conn.rank, conn.order
        off = 0.0
        mats = []
        for i in range(1, n + 1):
            c = conn.coeff(-i)
            off = max(off, float(np.abs(c - np.diag(np.diag(c))).max()))
            mats.append(DiagonalMatrix(tuple(np.diag(c))))
        if off > atol:
            raise InputError(f"polar part is not diagonal (off-diagonal {off:.3e})")
        if weights is None:
            weights = (0.0,) * r
        return PuncturePolarData(r, n, tuple(mats), tuple(weights))


def _cluster_indices(values: np.ndarray, tol_abs: float) -> np.ndarray:
    """Union-find clustering of complex values at absolute tolerance."""
    r = len(values)
    parent = list(range(r))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(r):
        for j in range(i + 1, r):
            if abs(values[i] - values[j]) <= tol_abs:
                ri, rj = find(i), find(j)
                if ri != rj:
                    parent[max(ri, rj)] = min(ri, rj)
    labels = np.array([find(i) for i in range(r)])
    # relabel 0..m-1 in order of first appearance
    order: dict = {}
    out = np.empty(r, dtype=int)
    for i, lab in enumerate(labels):
        if lab not in order:
            order[lab] = len(order)
        out[i] = order[lab]
    return out


def _diagonalize_semisimple(mat: np.ndarray, tol: float):
    """Diagonalize within clusters; returns (P, clusters).

    Eigenvalues are ordered lexicographically by (Re, Im) with the original
    index as tie-break; columns of P are normalized so their largest entry is
    1. Exactly diagonal input returns P = I in the given order. Raises
    NonSemisimpleLeading when some cluster's geometric multiplicity falls
    short of its size.
    """
    r = mat.shape[0]
    scale = max(1.0, float(np.abs(mat).max()))
    tol_abs = tol * scale
    off = mat - np.diag(np.diag(mat))
    if np.abs(off).max() == 0.0:
        return np.eye(r, dtype=complex), _cluster_indices(np.diag(mat), tol_abs)

    w, v = np.linalg.eig(mat)
    order = sorted(range(r), key=lambda i: (w[i].real, w[i].imag, i))
    w = w[order]
    v = v[:, order]
    clusters = _cluster_indices(w, tol_abs)

    cols = np.zeros((r, r), dtype=complex)
    for lab in range(clusters.max() + 1):
        idx = np.nonzero(clusters == lab)[0]
        m = len(idx)
        if m == 1:
            cols[:, idx[0]] = v[:, idx[0]]
            continue
        center = w[idx].mean()
        _, s, vh = np.linalg.svd(mat - center * np.eye(r))
        null_dim = int(np.sum(s <= tol_abs * np.sqrt(r) * 10))
        if null_dim < m:
            raise NonSemisimpleLeading(
                f"eigenvalue cluster at {center:.6g} has geometric multiplicity "
                f"{null_dim} < {m}"
            )
        cols[:, idx] = vh[r - m :].conj().T
    for j in range(r):
        pivot = int(np.argmax(np.abs(cols[:, j])))
        cols[:, j] = cols[:, j] / cols[pivot, j]
    if abs(np.linalg.det(cols)) < 1e-13 * r:
        raise NonSemisimpleLeading("eigenvector matrix is numerically singular")
    return cols, clusters


def normalize_polar(conn: FormalConnection, tol: float = 1e-9):
    """Gauge the polar part into the kernel of ad(leading coefficient).

    Diagonalizes C_{-n}, then for m = 1..n-1 applies the elementary gauge
    exp(u_m z^m) whose bracket with the leading term cancels the off-kernel
    part of the coefficient at z^{m-n}. Returns (FormalGauge, PolarNormalForm)
    where the gauge is the truncated logarithm of the composed elementary
    exponentials; applying exp(u) to the basis-changed input reproduces every
    coefficient of the returned connection, which is truncated at trunc - order
    so that all retained orders are exact.
    """
    r, n, big_n = conn.rank, conn.order, conn.trunc
    if big_n < n:
        raise TruncationTooShort(f"need truncation order >= {n}, got {big_n}")

    basis, clusters = _diagonalize_semisimple(conn.coeff(-n), tol)
    basis_inv = np.linalg.inv(basis)
    coeffs = np.einsum("ab,jbc,cd->jad", basis_inv, conn.coeffs, basis)
    series = MatSeries(-n, coeffs)

    lead = np.diag(series.coeff(-n))
    same = clusters[:, None] == clusters[None, :]
    denom = lead[:, None] - lead[None, :]

    g_total = identity_series(r)
    for m in range(1, n):
        c = series.coeff(-n + m)
        u_m = np.zeros((r, r), dtype=complex)
        u_m[~same] = c[~same] / denom[~same]
        if np.abs(u_m).max() == 0.0:
            continue
        u_poly = from_coeff(m, u_m)
        series = gauge_action(u_poly, series, big_n)
        g_total = exp_series(u_poly, big_n).mul(g_total, big_n)

    u = log_series(g_total, big_n)
    gauge_coeffs = np.zeros((big_n + 1, r, r), dtype=complex)
    for j in range(1, big_n + 1):
        gauge_coeffs[j] = u.coeff(j)
    gauge = FormalGauge(r, big_n, gauge_coeffs, fix_origin=True)

    residual = 0.0
    for j in range(-n, 0):
        c = series.coeff(j)
        if (~same).any():
            residual = max(residual, float(np.abs(c[~same]).max()))
    normal = FormalConnection.from_series(series, n, big_n - n)
    return gauge, PolarNormalForm(normal, basis, lead.copy(), residual)
