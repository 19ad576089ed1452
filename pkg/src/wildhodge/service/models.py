"""Request and response schemas for the HTTP service.

These mirror the JSON wire formats of wildhodge.serialization; complex
numbers travel as [re, im] pairs.
"""

from __future__ import annotations

from typing import List, Literal, Optional, Tuple

from pydantic import BaseModel, ConfigDict, Field, model_validator

Pair = Tuple[float, float]


class StrictModel(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PunctureModel(StrictModel):
    rank: int = Field(ge=1)
    order: int = Field(ge=1)
    coeffs: List[List[Pair]]
    weights: List[float]


class HiggsModel(PunctureModel):
    residue_eigs: List[Pair]


class GridModel(StrictModel):
    r_min: float = Field(gt=0.0)
    r_max: float = Field(default=1.0, le=1.0)
    n_r: int = Field(ge=4)
    n_theta: int = Field(ge=4)


class ConnectionModel(StrictModel):
    rank: int = Field(ge=1)
    order: int = Field(ge=1)
    trunc: int = Field(ge=0)
    coeffs: List[List[List[Pair]]]


class GaugeModel(StrictModel):
    rank: int = Field(ge=1)
    trunc: int = Field(ge=0)
    fix_origin: bool
    coeffs: List[List[List[Pair]]]


class CorrespondRequest(StrictModel):
    connection: Optional[PunctureModel] = None
    higgs: Optional[HiggsModel] = None

    @model_validator(mode="after")
    def _one_side(self):
        if (self.connection is None) == (self.higgs is None):
            raise ValueError("provide exactly one of 'connection' or 'higgs'")
        return self


class CorrespondResponse(StrictModel):
    connection: PunctureModel
    higgs: HiggsModel
    local_system_weights: List[float]
    irreducibility_regime: bool


class CurveModel(StrictModel):
    punctures: List[PunctureModel] = Field(min_length=1)
    c1: int = 0


class StabilityRequest(StrictModel):
    curve: CurveModel
    tol: float = Field(default=1e-9, gt=0.0)
    degree_tol: float = Field(default=1e-10, gt=0.0)


class ViolationModel(StrictModel):
    subsets: List[List[int]]
    value: Pair
    dist: float


class SubsumReportModel(StrictModel):
    generic: bool
    checked: int
    regular_leading: List[bool]
    violations: List[ViolationModel]


class StabilityResponse(StrictModel):
    report: SubsumReportModel
    degree: Pair
    degree_is_integer: bool
    parabolic_degree_alpha: float
    parabolic_degree_beta: float
    weight_identity_gap: float
    expected_dims: List[Optional[int]]


class OrbitSolveRequest(StrictModel):
    sigma: List[Pair]
    lam: List[Pair]
    seed: int = 0
    restarts: int = Field(default=16, ge=0)
    tol: float = Field(default=1e-11, gt=0.0)
    max_iter: int = Field(default=60, ge=1)


class OrbitSolutionResponse(StrictModel):
    B: List[List[Pair]]
    residual_char: float
    residual_diag: float
    gauge_balanced: bool
    iterations: int
    restart_index: int
    eigenvalue_distance: float


class VerifyExampleRequest(StrictModel):
    a0: Optional[List[Pair]] = None
    bp0: Optional[List[Pair]] = None
    g: Optional[List[List[Pair]]] = None
    tol: float = Field(default=1e-12, gt=0.0)

    @model_validator(mode="after")
    def _all_or_none(self):
        given = [self.a0 is not None, self.bp0 is not None, self.g is not None]
        if any(given) and not all(given):
            raise ValueError("provide a0, bp0, and g together, or none of them")
        return self


class ExampleResponse(StrictModel):
    passed: bool
    condition1: bool
    offdiag_31: float
    condition2: bool
    subsums: SubsumReportModel
    lam: List[Pair]
    b0: List[Pair]
    model_zero: PunctureModel
    model_infinity: PunctureModel


class ModelCheckRequest(StrictModel):
    puncture: PunctureModel
    levels: int = Field(default=3, ge=2)
    base_nr: int = Field(default=64, ge=8)
    base_ntheta: int = Field(default=64, ge=8)
    r_min: float = Field(default=0.3, gt=0.0)
    r_max: float = Field(default=0.9, le=1.0)


class ModelCheckRow(StrictModel):
    h: float
    max_f: float
    max_g: float
    observed_order: Optional[float] = None


class ModelCheckResponse(StrictModel):
    rows: List[ModelCheckRow]
    min_order: Optional[float]
    csv: str


class FrameGrowthRequest(StrictModel):
    puncture: PunctureModel
    side: Literal["dolbeault", "derham"]
    r_min: float = Field(default=1e-4, gt=0.0)
    r_max: float = Field(default=0.5, le=1.0)
    n_r: int = Field(default=48, ge=8)


class FrameGrowthResponse(StrictModel):
    side: str
    expected: List[float]
    slopes: List[float]
    max_error: float
    csv: str


class GaugeFixRequest(StrictModel):
    puncture: PunctureModel
    grid: GridModel
    perturbation_csv: str
    delta: float = 0.5
    p: float = Field(default=4.0, gt=2.0)
    tol: float = Field(default=1e-8, gt=0.0)
    max_iter: int = Field(default=50, ge=1)


class GaugeFixResponse(StrictModel):
    residual: float
    residual_fd: float
    homothety: float
    iterations: int
    trace: List[float]
    grid: GridModel
    gauge_sup: float
    gauge_csv: str
    trace_csv: str


class NormalizeRequest(StrictModel):
    connection: ConnectionModel
    tol: float = Field(default=1e-9, gt=0.0)


class NormalizeResponse(StrictModel):
    gauge: GaugeModel
    connection: ConnectionModel
    basis: List[List[Pair]]
    leading: List[List[Pair]]
    residual: float


class HealthResponse(StrictModel):
    status: str
    version: str
