"""Local models of irregular connections and meromorphic Higgs bundles.

Numerics for puncture-local normal forms, the connection/Higgs weight
dictionary, stability genericity, diagonal moment-map orbit problems, and
disk-grid verification of the model fields and dbar gauge fixing.
"""

from .errors import (
    BudgetExceeded,
    GridTooCoarse,
    InputError,
    NegativeDim,
    NoContraction,
    NoConvergence,
    NonIntegerDegree,
    NonRegularLeading,
    NonSemisimpleLeading,
    OscillationUnresolved,
    RankMismatch,
    ResonantWeight,
    TraceMismatch,
    TruncationTooShort,
    WildHodgeError,
)
from .polar import (
    DiagonalMatrix,
    FormalConnection,
    FormalGauge,
    LevelDecomposition,
    PolarNormalForm,
    PuncturePolarData,
    end_levels,
    normalize_polar,
    zero_polar_data,
)

__all__ = [
    "BudgetExceeded",
    "GridTooCoarse",
    "InputError",
    "NegativeDim",
    "NoContraction",
    "NoConvergence",
    "NonIntegerDegree",
    "NonRegularLeading",
    "NonSemisimpleLeading",
    "OscillationUnresolved",
    "RankMismatch",
    "ResonantWeight",
    "TraceMismatch",
    "TruncationTooShort",
    "WildHodgeError",
    "DiagonalMatrix",
    "FormalConnection",
    "FormalGauge",
    "LevelDecomposition",
    "PolarNormalForm",
    "PuncturePolarData",
    "end_levels",
    "normalize_polar",
    "zero_polar_data",
]

__version__ = "0.1.0"
