"""Dictionary between connection-side and Higgs-side local data.

Connection side carries (A_1..A_n, beta) with residue eigenvalues mu; Higgs
side carries (T_1..T_n, alpha, lambda). The translation is T_i = A_i / 2 for
i >= 2, T_1 = (A_1 - beta) / 2, alpha_i = Re mu_i mod 1, lambda_i =
(mu_i - beta_i) / 2, inverted by beta_i = (alpha_i - 2 Re lambda_i) mod 1 and
mu_i = 2 lambda_i + beta_i. Both mod-1 reductions land in [0, 1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .polar import DiagonalMatrix, PuncturePolarData

MOD1_SNAP = 1e-12


def mod1(x: float) -> float:
    """Representative of x mod 1 in [0, 1), snapping roundoff at the ends.

    Values within 1e-12 of an integer collapse to 0 so that integer inputs
    survive float noise and 1 - eps artifacts cannot appear.
    """
    f = x - math.floor(x)
    if f >= 1.0 - MOD1_SNAP or f <= MOD1_SNAP:
        return 0.0
    return f


@dataclass(frozen=True)
class HiggsPolarData:
    """Higgs-side local data: diagonal polar part, weights, residue eigenvalues.

    higgs_coeffs lists T_1..T_n (residue first); weights are alpha_1..alpha_r
    in [0, 1); residue_eigs are the lambda_i, which must equal the entries of
    T_1.
    """

    rank: int
    order: int
    higgs_coeffs: tuple
    weights: tuple
    residue_eigs: tuple

    def __post_init__(self):
        if self.rank < 1:
            raise InputError("rank must be positive")
        if self.order < 1:
            raise InputError("pole order must be positive")
        coeffs = tuple(
            c if isinstance(c, DiagonalMatrix) else DiagonalMatrix(tuple(c))
            for c in self.higgs_coeffs
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
        eigs = tuple(complex(e) for e in self.residue_eigs)
        if len(eigs) != self.rank:
            raise InputError("need one residue eigenvalue per basis direction")
        t1 = coeffs[0].vector()
        if np.abs(t1 - np.array(eigs)).max() > 1e-9:
            raise InputError("residue eigenvalues must equal the entries of T_1")
        object.__setattr__(self, "higgs_coeffs", coeffs)
        object.__setattr__(self, "weights", weights)
        object.__setattr__(self, "residue_eigs", eigs)

    def coeff(self, i: int) -> DiagonalMatrix:
        """T_i for 1 <= i <= order."""
        if not 1 <= i <= self.order:
            raise InputError(f"no coefficient T_{i}")
        return self.higgs_coeffs[i - 1]

    @property
    def lam(self) -> np.ndarray:
        return np.array(self.residue_eigs, dtype=complex)

    @property
    def alpha(self) -> np.ndarray:
        return np.array(self.weights, dtype=float)


def dr_to_dol(data: PuncturePolarData) -> HiggsPolarData:
    """Connection-side to Higgs-side local data."""
    mu = data.mu
    beta = data.beta
    lam = (mu - beta) / 2.0
    alpha = tuple(mod1(m.real) for m in mu)
    mats = [DiagonalMatrix(tuple(lam))]
    for i in range(2, data.order + 1):
        mats.append(DiagonalMatrix(tuple(data.coeff(i).vector() / 2.0)))
    return HiggsPolarData(data.rank, data.order, tuple(mats), alpha, tuple(lam))


def dol_to_dr(data: HiggsPolarData) -> PuncturePolarData:
    """Higgs-side to connection-side local data; inverse of dr_to_dol."""
    lam = data.lam
    beta = np.array([mod1(a - 2.0 * l.real) for a, l in zip(data.weights, lam)])
    mu = 2.0 * lam + beta
    mats = [DiagonalMatrix(tuple(mu))]
    for i in range(2, data.order + 1):
        mats.append(DiagonalMatrix(tuple(2.0 * data.coeff(i).vector())))
    return PuncturePolarData(data.rank, data.order, tuple(mats), tuple(beta))


def local_system_weights(data: PuncturePolarData) -> np.ndarray:
    """Weights gamma_i = beta_i - Re mu_i of the associated local system.

    Equal to -2 Re lambda_i of the Higgs-side data; all-zero gamma means the
    parabolic structure is invisible and stability degenerates to
    irreducibility.
    """
    return data.beta - data.mu.real
