"""Degrees, parabolic degrees, and the generic-stability subsum test.

A configuration is a list of puncture-local data on one curve plus the first
Chern number of the chosen extension. Residues at a puncture are always taken
in that puncture's own local coordinate; at infinity with w = 1/z a global
residue B enters as -B, since dz/z = -dw/w.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass

import numpy as np

from ._parallel import thread_map
from .correspondence import mod1
from .errors import BudgetExceeded, InputError, NegativeDim, NonIntegerDegree
from .polar import PuncturePolarData

SUBSUM_CAP = 10_000_000
_CHUNK = 1 << 18


@dataclass(frozen=True)
class CurveConfig:
    """Punctures with shared rank plus the extension's first Chern number."""

    punctures: tuple
    c1: int = 0

    def __post_init__(self):
        punctures = tuple(self.punctures)
        ranks = {p.rank for p in punctures}
        if len(ranks) > 1:
            raise InputError(f"punctures disagree on rank: {sorted(ranks)}")
        for p in punctures:
            if not isinstance(p, PuncturePolarData):
                raise InputError("punctures must be PuncturePolarData")
        object.__setattr__(self, "punctures", punctures)
        object.__setattr__(self, "c1", int(self.c1))

    @property
    def rank(self) -> int:
        if not self.punctures:
            raise InputError("empty configuration has no rank")
        return self.punctures[0].rank


@dataclass(frozen=True)
class SubsumViolation:
    """One subset choice whose residue subsum is integrally resonant."""

    subsets: tuple  # one index tuple per puncture, all the same size
    value: complex
    dist: float


@dataclass(frozen=True)
class SubsumReport:
    """Outcome of the genericity enumeration."""

    generic: bool
    violations: tuple
    checked: int
    regular_leading: tuple  # per puncture: leading coefficient has distinct entries

    def __post_init__(self):
        if self.generic != (len(self.violations) == 0):
            raise InputError("generic flag contradicts the violation list")


def degree_from_residues(cfg: CurveConfig, tol: float = 1e-9) -> complex:
    """Minus the sum of residue traces; the degree of the extension.

    Warns (NonIntegerDegree) when the result is not integral to tol, which
    signals inconsistent input data rather than a computational failure.
    """
    total = 0.0 + 0.0j
    for p in cfg.punctures:
        total += p.mu.sum()
    deg = -total
    off = abs(deg.imag) + abs(deg.real - round(deg.real))
    if off > tol:
        warnings.warn(
            f"residue traces sum to {deg}, not an integer (off by {off:.3e})",
            NonIntegerDegree,
            stacklevel=2,
        )
    return deg


def parabolic_degree(cfg: CurveConfig, weights_side: str = "beta") -> float:
    """c1 plus the sum of the selected parabolic weights over all punctures.

    'beta' uses the stored connection-side weights; 'alpha' uses the
    Higgs-side weights alpha_i = Re mu_i mod 1 derived from the residues.
    """
    if weights_side not in ("alpha", "beta"):
        raise InputError(f"unknown weights side {weights_side!r}")
    total = float(cfg.c1)
    for p in cfg.punctures:
        if weights_side == "beta":
            total += float(p.beta.sum())
        else:
            total += sum(mod1(m.real) for m in p.mu)
    return total


def _int_dist(vals: np.ndarray) -> np.ndarray:
    return np.abs(vals.imag) + np.abs(vals.real - np.round(vals.real))


def subsum_count(rank: int, n_punctures: int) -> int:
    """Number of subset choices the full enumeration visits."""
    return sum(math.comb(rank, k) ** n_punctures for k in range(1, rank))


def subsum_check(
    cfg: CurveConfig, tol: float = 1e-9, cap: int = SUBSUM_CAP
) -> SubsumReport:
    """Enumerate residue subsums over all same-size subset choices.

    For every k = 1..r-1 and every choice of a size-k index subset at each
    puncture, the summed residue entries must stay away from the integers;
    a subsum within tol (measured as |Im| + distance of Re to the nearest
    integer) is recorded as a violation. Work is streamed in chunks and never
    materialized; the total count must stay under cap.
    """
    regular = tuple(
        len(set(p.coeff(p.order).entries)) == p.rank for p in cfg.punctures
    )
    if not cfg.punctures:
        return SubsumReport(True, (), 0, ())
    r = cfg.rank
    n_p = len(cfg.punctures)
    if r < 2:
        return SubsumReport(True, (), 0, regular)
    required = subsum_count(r, n_p)
    if required > cap:
        raise BudgetExceeded(required, cap)

    residues = [p.mu for p in cfg.punctures]
    violations = []
    for k in range(1, r):
        subsets = list(itertools.combinations(range(r), k))
        n_sub = len(subsets)
        sums = np.array(
            [[res[list(s)].sum() for s in subsets] for res in residues]
        )  # (n_p, n_sub)
        total = n_sub**n_p
        radix = n_sub ** np.arange(n_p - 1, -1, -1, dtype=np.int64)

        def eval_chunk(bounds, sums=sums, radix=radix, n_sub=n_sub, subsets=subsets):
            start, stop = bounds
            flat = np.arange(start, stop, dtype=np.int64)
            idx = (flat[:, None] // radix[None, :]) % n_sub  # (m, n_p)
            vals = sums[np.arange(sums.shape[0])[None, :], idx].sum(axis=1)
            dist = _int_dist(vals)
            hits = np.nonzero(dist <= tol)[0]
            return [
                SubsumViolation(
                    tuple(subsets[j] for j in idx[h]), complex(vals[h]), float(dist[h])
                )
                for h in hits
            ]

        chunks = [(s, min(s + _CHUNK, total)) for s in range(0, total, _CHUNK)]
        for found in thread_map(eval_chunk, chunks):
            violations.extend(found)

    violations.sort(key=lambda v: (len(v.subsets[0]), v.subsets))
    return SubsumReport(not violations, tuple(violations), required, regular)


def expected_moduli_dim(multiplicities, rank: int) -> int:
    """Complex dimension r^2 - sum m_j^2 - 2(r - 1) of the expected moduli.

    The orbit through a matrix with eigenvalue multiplicities m_j has
    dimension r^2 - sum m_j^2; the effective torus (diagonal matrices modulo
    scalars) removes 2(r - 1) in the symplectic quotient.
    """
    mult = [int(m) for m in multiplicities]
    if any(m < 1 for m in mult):
        raise InputError("multiplicities must be positive")
    if sum(mult) != rank:
        raise InputError(f"multiplicities sum to {sum(mult)}, rank is {rank}")
    dim = rank * rank - sum(m * m for m in mult) - 2 * (rank - 1)
    if dim < 0:
        raise NegativeDim(f"formula gives {dim}; configuration outside the intended regime")
    return dim
