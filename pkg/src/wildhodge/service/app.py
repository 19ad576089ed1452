"""HTTP service exposing the package operations, plus the in-process
handlers the command line shares with it.

Handlers take and return plain JSON-compatible dicts, validating requests
against the pydantic schemas and raising the package's own error types;
the FastAPI layer maps those to HTTP statuses (422 for input problems, 409
for resource caps and non-convergence), carrying the error class name so a
remote client can react exactly like an in-process caller.
"""

from __future__ import annotations

import math

import numpy as np
from pydantic import ValidationError

from .. import __version__
from ..correspondence import dol_to_dr, dr_to_dol, local_system_weights
from ..dbar import gauge_fix
from ..errors import (
    BudgetExceeded,
    InputError,
    NegativeDim,
    NoContraction,
    NoConvergence,
    OscillationUnresolved,
)
from ..fields import discrete_curvature, eval_model_fields, frame_growth
from ..grids import DiskGrid
from ..orbit import (
    OrbitDiagonalProblem,
    builtin_example_report,
    eigenvalue_match_distance,
    solve_orbit_diagonal,
    verify_nontrivial_example,
)
from ..polar import DiagonalMatrix, normalize_polar
from ..serialization import (
    decode_connection,
    decode_curve,
    decode_higgs,
    decode_puncture,
    encode_connection,
    encode_example_report,
    encode_gauge,
    encode_grid,
    encode_higgs,
    encode_orbit_solution,
    encode_puncture,
    encode_subsum_report,
    frame_growth_csv,
    grid_field_csv,
    model_check_csv,
    parse_grid_field_csv,
    trace_csv,
)
from ..stability import (
    degree_from_residues,
    expected_moduli_dim,
    parabolic_degree,
    subsum_check,
)
from . import models


def _validate(model_cls, payload: dict):
    try:
        return model_cls.model_validate(payload)
    except ValidationError as exc:
        first = exc.errors()[0]
        loc = ".".join(str(p) for p in first["loc"]) or "request"
        raise InputError(f"field '{loc}': {first['msg']}")


def _matrix_pairs(mat: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in np.asarray(mat, complex)]


def handle_correspond(payload: dict) -> dict:
    req = _validate(models.CorrespondRequest, payload)
    if req.connection is not None:
        data = decode_puncture(req.connection.model_dump(), "connection")
        higgs = dr_to_dol(data)
    else:
        higgs = decode_higgs(req.higgs.model_dump(), "higgs")
        data = dol_to_dr(higgs)
    gamma = local_system_weights(data)
    return {
        "connection": encode_puncture(data),
        "higgs": encode_higgs(higgs),
        "local_system_weights": [float(g) for g in gamma],
        "irreducibility_regime": bool(np.all(np.abs(gamma) < 1e-12)),
    }


def _leading_multiplicities(data) -> tuple:
    entries = data.coeff(data.order).vector()
    counts = {}
    for e in entries:
        counts[e] = counts.get(e, 0) + 1
    return tuple(sorted(counts.values()))


def handle_stability(payload: dict) -> dict:
    req = _validate(models.StabilityRequest, payload)
    cfg = decode_curve(req.curve.model_dump(), "curve")
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        degree = degree_from_residues(cfg, req.degree_tol)
    deg_int = abs(degree.imag) + abs(degree.real - round(degree.real)) <= req.degree_tol
    pdeg_a = parabolic_degree(cfg, "alpha")
    pdeg_b = parabolic_degree(cfg, "beta")
    gamma_total = sum(
        float(local_system_weights(p).sum()) for p in cfg.punctures
    )
    identity_gap = abs(gamma_total - ((pdeg_b - cfg.c1) + degree.real))
    report = subsum_check(cfg, tol=req.tol)
    dims = []
    for p in cfg.punctures:
        try:
            dims.append(expected_moduli_dim(_leading_multiplicities(p), p.rank))
        except NegativeDim:
            dims.append(None)
    return {
        "report": encode_subsum_report(report),
        "degree": [degree.real, degree.imag],
        "degree_is_integer": bool(deg_int),
        "parabolic_degree_alpha": pdeg_a,
        "parabolic_degree_beta": pdeg_b,
        "weight_identity_gap": identity_gap,
        "expected_dims": dims,
    }


def handle_orbit_solve(payload: dict) -> dict:
    req = _validate(models.OrbitSolveRequest, payload)
    prob = OrbitDiagonalProblem(
        sigma=tuple(complex(re, im) for re, im in req.sigma),
        lam=DiagonalMatrix(tuple(complex(re, im) for re, im in req.lam)),
    )
    sol = solve_orbit_diagonal(
        prob, seed=req.seed, restarts=req.restarts, tol=req.tol, max_iter=req.max_iter
    )
    out = encode_orbit_solution(sol)
    out["eigenvalue_distance"] = float(eigenvalue_match_distance(sol.B, prob.sigma))
    return out


def handle_verify_example(payload: dict) -> dict:
    req = _validate(models.VerifyExampleRequest, payload)
    if req.a0 is None:
        report = builtin_example_report(req.tol)
    else:
        a0 = DiagonalMatrix(tuple(complex(re, im) for re, im in req.a0))
        bp0 = DiagonalMatrix(tuple(complex(re, im) for re, im in req.bp0))
        g = np.array(
            [[complex(re, im) for re, im in row] for row in req.g], dtype=complex
        )
        report = verify_nontrivial_example(a0, bp0, g, req.tol)
    return encode_example_report(report)


def handle_model_check(payload: dict) -> dict:
    req = _validate(models.ModelCheckRequest, payload)
    data = decode_puncture(req.puncture.model_dump(), "puncture")
    if not req.r_min < req.r_max:
        raise InputError("need r_min < r_max")
    rows = []
    for lvl in range(req.levels):
        grid = DiskGrid(
            req.r_min, req.r_max, req.base_nr * 2**lvl, req.base_ntheta * 2**lvl
        )
        sampled = eval_model_fields(data, grid)
        f_max, g_max = discrete_curvature(sampled)
        rows.append((grid.h_t, f_max, g_max))
    out_rows = []
    orders = []
    for i, (h, mf, mg) in enumerate(rows):
        order = None
        if i:
            h0, mf0, mg0 = rows[i - 1]
            worst0, worst = max(mf0, 1e-300), max(mf, mg, 1e-300)
            order = math.log(max(worst0, mg0, 1e-300) / worst) / math.log(h0 / h)
            orders.append(order)
        out_rows.append(
            {"h": h, "max_f": mf, "max_g": mg, "observed_order": order}
        )
    return {
        "rows": out_rows,
        "min_order": min(orders) if orders else None,
        "csv": model_check_csv(rows),
    }


def handle_frame_growth(payload: dict) -> dict:
    req = _validate(models.FrameGrowthRequest, payload)
    data = decode_puncture(req.puncture.model_dump(), "puncture")
    if not req.r_min < req.r_max:
        raise InputError("need r_min < r_max")
    grid = DiskGrid(req.r_min, req.r_max, req.n_r, 4)
    slopes = frame_growth(data, req.side, grid)
    if req.side == "dolbeault":
        expected = [m.real - math.floor(m.real) for m in data.mu]
    else:
        expected = [float(b) for b in data.beta]
    err = max(abs(s - e) for s, e in zip(slopes, expected))
    return {
        "side": req.side,
        "expected": expected,
        "slopes": [float(s) for s in slopes],
        "max_error": float(err),
        "csv": frame_growth_csv(req.side, expected, slopes),
    }


def handle_gauge_fix(payload: dict) -> dict:
    req = _validate(models.GaugeFixRequest, payload)
    data = decode_puncture(req.puncture.model_dump(), "puncture")
    grid = DiskGrid(req.grid.r_min, req.grid.r_max, req.grid.n_r, req.grid.n_theta)
    a = parse_grid_field_csv(req.perturbation_csv, grid, data.rank)
    result = gauge_fix(
        a, data, delta=req.delta, p=req.p, tol=req.tol, max_iter=req.max_iter
    )
    return {
        "residual": result.residual,
        "residual_fd": result.residual_fd,
        "homothety": result.homothety,
        "iterations": result.iterations,
        "trace": [float(t) for t in result.trace],
        "grid": encode_grid(result.u.grid),
        "gauge_sup": result.u.max_abs(),
        "gauge_csv": grid_field_csv(result.u),
        "trace_csv": trace_csv(result.trace),
    }


def handle_normalize(payload: dict) -> dict:
    req = _validate(models.NormalizeRequest, payload)
    conn = decode_connection(req.connection.model_dump(), "connection")
    gauge, form = normalize_polar(conn, tol=req.tol)
    return {
        "gauge": encode_gauge(gauge),
        "connection": encode_connection(form.connection),
        "basis": _matrix_pairs(form.basis),
        "leading": _matrix_pairs(form.leading),
        "residual": float(form.residual),
    }


HANDLERS = {
    "correspond": handle_correspond,
    "stability": handle_stability,
    "orbit-solve": handle_orbit_solve,
    "verify-example": handle_verify_example,
    "model-check": handle_model_check,
    "frame-growth": handle_frame_growth,
    "gauge-fix": handle_gauge_fix,
    "normalize": handle_normalize,
}

ROUTES = {
    "correspond": "/correspond",
    "stability": "/stability",
    "orbit-solve": "/orbit/solve",
    "verify-example": "/orbit/verify-example",
    "model-check": "/model-check",
    "frame-growth": "/frame-growth",
    "gauge-fix": "/gauge-fix",
    "normalize": "/normalize",
}

CAP_ERRORS = (BudgetExceeded, OscillationUnresolved)
CONVERGENCE_ERRORS = (NoConvergence, NoContraction)


def create_app():
    from fastapi import FastAPI, HTTPException

    app = FastAPI(title="wildhodge", version=__version__)

    def run(handler, payload):
        try:
            return handler(payload)
        except InputError as exc:
            raise HTTPException(
                status_code=422,
                detail={"error": type(exc).__name__, "message": str(exc)},
            )
        except CAP_ERRORS + CONVERGENCE_ERRORS as exc:
            raise HTTPException(
                status_code=409,
                detail={"error": type(exc).__name__, "message": str(exc)},
            )

    @app.get("/health", response_model=models.HealthResponse)
    def health():
        return {"status": "ok", "version": __version__}

    @app.post(ROUTES["correspond"], response_model=models.CorrespondResponse)
    def correspond(req: models.CorrespondRequest):
        return run(handle_correspond, req.model_dump(exclude_none=True))

    @app.post(ROUTES["stability"], response_model=models.StabilityResponse)
    def stability(req: models.StabilityRequest):
        return run(handle_stability, req.model_dump())

    @app.post(ROUTES["orbit-solve"], response_model=models.OrbitSolutionResponse)
    def orbit_solve(req: models.OrbitSolveRequest):
        return run(handle_orbit_solve, req.model_dump())

    @app.post(ROUTES["verify-example"], response_model=models.ExampleResponse)
    def verify_example(req: models.VerifyExampleRequest):
        return run(handle_verify_example, req.model_dump(exclude_none=True))

    @app.post(ROUTES["model-check"], response_model=models.ModelCheckResponse)
    def model_check(req: models.ModelCheckRequest):
        return run(handle_model_check, req.model_dump())

    @app.post(ROUTES["frame-growth"], response_model=models.FrameGrowthResponse)
    def frame_growth_ep(req: models.FrameGrowthRequest):
        return run(handle_frame_growth, req.model_dump())

    @app.post(ROUTES["gauge-fix"], response_model=models.GaugeFixResponse)
    def gauge_fix_ep(req: models.GaugeFixRequest):
        return run(handle_gauge_fix, req.model_dump())

    @app.post(ROUTES["normalize"], response_model=models.NormalizeResponse)
    def normalize(req: models.NormalizeRequest):
        return run(handle_normalize, req.model_dump())

    return app
