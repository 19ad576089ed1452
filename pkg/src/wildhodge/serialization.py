"""Wire formats: deterministic JSON and the grid-field CSV layout.

JSON output is byte-stable: keys sorted, floats printed with 17 significant
digits (enough to round-trip IEEE doubles exactly), complex numbers encoded
as [re, im] pairs. Parsing goes through the standard json module; failures
surface as InputError carrying the line and column.
"""

from __future__ import annotations

import json
import math

import numpy as np

from .correspondence import HiggsPolarData
from .dbar import GaugeFixResult
from .errors import InputError
from .grids import FIELD_KINDS, DiskGrid, GridField
from .orbit import ExampleReport, OrbitDiagonalProblem, OrbitSolution
from .polar import DiagonalMatrix, FormalConnection, FormalGauge, PuncturePolarData
from .stability import CurveConfig, SubsumReport, SubsumViolation


def _fmt_float(x: float) -> str:
    x = float(x)
    if not math.isfinite(x):
        raise InputError("JSON output requires finite numbers")
    return format(x, ".17g")


def _emit(value, indent: int) -> str:
    pad = "  " * indent
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return _fmt_float(value)
    if isinstance(value, str):
        return json.dumps(value)
    if value is None:
        return "null"
    if isinstance(value, (list, tuple)):
        items = list(value)
        if not items:
            return "[]"
        flat = all(
            isinstance(v, (bool, int, float, str, np.integer, np.floating)) or v is None
            for v in items
        )
        parts = [_emit(v, indent + 1) for v in items]
        if flat:
            return "[" + ", ".join(parts) + "]"
        inner = ",\n".join(pad + "  " + p for p in parts)
        return "[\n" + inner + "\n" + pad + "]"
    if isinstance(value, dict):
        if not value:
            return "{}"
        parts = []
        for key in sorted(value):
            if not isinstance(key, str):
                raise InputError("JSON object keys must be strings")
            parts.append(pad + "  " + json.dumps(key) + ": " + _emit(value[key], indent + 1))
        return "{\n" + ",\n".join(parts) + "\n" + pad + "}"
    raise InputError(f"cannot serialize value of type {type(value).__name__}")


def dumps(value) -> str:
    """Deterministic JSON text, newline terminated."""
    return _emit(value, 0) + "\n"


def loads(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}")


def _pair(z) -> list:
    z = complex(z)
    return [z.real, z.imag]


def _as_complex(obj, where: str) -> complex:
    if (
        not isinstance(obj, (list, tuple))
        or len(obj) != 2
        or not all(isinstance(p, (int, float)) for p in obj)
    ):
        raise InputError(f"field '{where}': expected an [re, im] pair")
    return complex(obj[0], obj[1])


def _need(obj: dict, key: str, kinds, where: str):
    if not isinstance(obj, dict):
        raise InputError(f"'{where}': expected a JSON object")
    if key not in obj:
        raise InputError(f"'{where}': missing field '{key}'")
    val = obj[key]
    if kinds is not None and not isinstance(val, kinds):
        raise InputError(f"field '{where}.{key}' has the wrong type")
    if isinstance(val, bool) and kinds is not None and bool not in (
        kinds if isinstance(kinds, tuple) else (kinds,)
    ):
        raise InputError(f"field '{where}.{key}' has the wrong type")
    return val


def _diag_list(mats, where: str) -> tuple:
    if not isinstance(mats, list):
        raise InputError(f"field '{where}' must be a list")
    out = []
    for i, entries in enumerate(mats):
        if not isinstance(entries, list):
            raise InputError(f"field '{where}[{i}]' must be a list of [re, im] pairs")
        out.append(
            DiagonalMatrix(tuple(_as_complex(e, f"{where}[{i}][{j}]") for j, e in enumerate(entries)))
        )
    return tuple(out)


# ---------------------------------------------------------------------------
# polar data


def encode_puncture(data: PuncturePolarData) -> dict:
    return {
        "rank": data.rank,
        "order": data.order,
        "coeffs": [[_pair(e) for e in c.entries] for c in data.coeffs],
        "weights": [float(w) for w in data.weights],
    }


def decode_puncture(obj: dict, where: str = "puncture") -> PuncturePolarData:
    rank = _need(obj, "rank", int, where)
    order = _need(obj, "order", int, where)
    coeffs = _diag_list(_need(obj, "coeffs", list, where), f"{where}.coeffs")
    weights = _need(obj, "weights", list, where)
    return PuncturePolarData(rank=rank, order=order, coeffs=coeffs, weights=tuple(weights))


def encode_higgs(data: HiggsPolarData) -> dict:
    return {
        "rank": data.rank,
        "order": data.order,
        "coeffs": [[_pair(e) for e in c.entries] for c in data.higgs_coeffs],
        "weights": [float(w) for w in data.weights],
        "residue_eigs": [_pair(e) for e in data.residue_eigs],
    }


def decode_higgs(obj: dict, where: str = "higgs") -> HiggsPolarData:
    rank = _need(obj, "rank", int, where)
    order = _need(obj, "order", int, where)
    coeffs = _diag_list(_need(obj, "coeffs", list, where), f"{where}.coeffs")
    weights = _need(obj, "weights", list, where)
    eigs = _need(obj, "residue_eigs", list, where)
    return HiggsPolarData(
        rank=rank,
        order=order,
        higgs_coeffs=coeffs,
        weights=tuple(weights),
        residue_eigs=tuple(_as_complex(e, f"{where}.residue_eigs[{i}]") for i, e in enumerate(eigs)),
    )


def _matrix_to_lists(mat: np.ndarray) -> list:
    return [[_pair(mat[i, j]) for j in range(mat.shape[1])] for i in range(mat.shape[0])]


def _matrix_from_lists(rows, rank: int, where: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != rank:
        raise InputError(f"field '{where}' must be a {rank} x {rank} matrix")
    out = np.zeros((rank, rank), dtype=complex)
    for i, row in enumerate(rows):
        if not isinstance(row, list) or len(row) != rank:
            raise InputError(f"field '{where}[{i}]' must hold {rank} entries")
        for j, e in enumerate(row):
            out[i, j] = _as_complex(e, f"{where}[{i}][{j}]")
    return out


def encode_connection(conn: FormalConnection) -> dict:
    return {
        "rank": conn.rank,
        "order": conn.order,
        "trunc": conn.trunc,
        "coeffs": [_matrix_to_lists(c) for c in conn.coeffs],
    }


def decode_connection(obj: dict, where: str = "connection") -> FormalConnection:
    rank = _need(obj, "rank", int, where)
    order = _need(obj, "order", int, where)
    trunc = _need(obj, "trunc", int, where)
    rows = _need(obj, "coeffs", list, where)
    coeffs = np.stack(
        [_matrix_from_lists(m, rank, f"{where}.coeffs[{i}]") for i, m in enumerate(rows)]
    )
    return FormalConnection(rank=rank, order=order, trunc=trunc, coeffs=coeffs)


def encode_gauge(g: FormalGauge) -> dict:
    return {
        "rank": g.rank,
        "trunc": g.trunc,
        "fix_origin": bool(g.fix_origin),
        "coeffs": [_matrix_to_lists(c) for c in g.coeffs],
    }


def decode_gauge(obj: dict, where: str = "gauge") -> FormalGauge:
    rank = _need(obj, "rank", int, where)
    trunc = _need(obj, "trunc", int, where)
    fix_origin = _need(obj, "fix_origin", bool, where)
    rows = _need(obj, "coeffs", list, where)
    coeffs = np.stack(
        [_matrix_from_lists(m, rank, f"{where}.coeffs[{i}]") for i, m in enumerate(rows)]
    )
    return FormalGauge(rank=rank, trunc=trunc, coeffs=coeffs, fix_origin=fix_origin)


# ---------------------------------------------------------------------------
# stability and orbit


def encode_curve(cfg: CurveConfig) -> dict:
    return {
        "punctures": [encode_puncture(p) for p in cfg.punctures],
        "c1": int(cfg.c1),
    }


def decode_curve(obj: dict, where: str = "curve") -> CurveConfig:
    rows = _need(obj, "punctures", list, where)
    punctures = tuple(
        decode_puncture(p, f"{where}.punctures[{i}]") for i, p in enumerate(rows)
    )
    c1 = obj.get("c1", 0)
    if not isinstance(c1, int) or isinstance(c1, bool):
        raise InputError(f"field '{where}.c1' must be an integer")
    return CurveConfig(punctures=punctures, c1=c1)


def encode_subsum_report(rep: SubsumReport) -> dict:
    return {
        "generic": bool(rep.generic),
        "checked": int(rep.checked),
        "regular_leading": [bool(b) for b in rep.regular_leading],
        "violations": [
            {
                "subsets": [list(map(int, s)) for s in v.subsets],
                "value": _pair(v.value),
                "dist": float(v.dist),
            }
            for v in rep.violations
        ],
    }


def decode_subsum_report(obj: dict, where: str = "report") -> SubsumReport:
    violations = []
    for i, v in enumerate(_need(obj, "violations", list, where)):
        violations.append(
            SubsumViolation(
                subsets=tuple(tuple(s) for s in _need(v, "subsets", list, f"{where}.violations[{i}]")),
                value=_as_complex(_need(v, "value", list, f"{where}.violations[{i}]"), "value"),
                dist=float(_need(v, "dist", (int, float), f"{where}.violations[{i}]")),
            )
        )
    return SubsumReport(
        generic=_need(obj, "generic", bool, where),
        violations=tuple(violations),
        checked=_need(obj, "checked", int, where),
        regular_leading=tuple(_need(obj, "regular_leading", list, where)),
    )


def encode_orbit_problem(prob: OrbitDiagonalProblem) -> dict:
    return {
        "sigma": [_pair(s) for s in prob.sigma],
        "lam": [_pair(e) for e in prob.lam.entries],
    }


def decode_orbit_problem(obj: dict, where: str = "orbit") -> OrbitDiagonalProblem:
    sigma = _need(obj, "sigma", list, where)
    lam = _need(obj, "lam", list, where)
    return OrbitDiagonalProblem(
        sigma=tuple(_as_complex(s, f"{where}.sigma[{i}]") for i, s in enumerate(sigma)),
        lam=DiagonalMatrix(tuple(_as_complex(e, f"{where}.lam[{i}]") for i, e in enumerate(lam))),
    )


def encode_orbit_solution(sol: OrbitSolution) -> dict:
    return {
        "B": _matrix_to_lists(sol.B),
        "residual_char": float(sol.residuals[0]),
        "residual_diag": float(sol.residuals[1]),
        "gauge_balanced": bool(sol.gauge_balanced),
        "iterations": int(sol.iterations),
        "restart_index": int(sol.restart_index),
    }


def decode_orbit_solution(obj: dict, where: str = "solution") -> OrbitSolution:
    rows = _need(obj, "B", list, where)
    rank = len(rows)
    return OrbitSolution(
        B=_matrix_from_lists(rows, rank, f"{where}.B"),
        residuals=(
            float(_need(obj, "residual_char", (int, float), where)),
            float(_need(obj, "residual_diag", (int, float), where)),
        ),
        gauge_balanced=_need(obj, "gauge_balanced", bool, where),
        iterations=_need(obj, "iterations", int, where),
        restart_index=_need(obj, "restart_index", int, where),
    )


def encode_example_report(rep: ExampleReport) -> dict:
    return {
        "passed": bool(rep.passed),
        "condition1": bool(rep.condition1),
        "offdiag_31": float(rep.offdiag_31),
        "condition2": bool(rep.condition2),
        "subsums": encode_subsum_report(rep.subsums),
        "lam": [_pair(e) for e in rep.lam.entries],
        "b0": [_pair(e) for e in rep.b0.entries],
        "model_zero": encode_puncture(rep.model_zero),
        "model_infinity": encode_puncture(rep.model_infinity),
    }


# ---------------------------------------------------------------------------
# grids and gauge-fix results


def encode_grid(grid: DiskGrid) -> dict:
    return {
        "r_min": float(grid.r_min),
        "r_max": float(grid.r_max),
        "n_r": int(grid.n_r),
        "n_theta": int(grid.n_theta),
    }


def decode_grid(obj: dict, where: str = "grid") -> DiskGrid:
    return DiskGrid(
        r_min=float(_need(obj, "r_min", (int, float), where)),
        r_max=float(_need(obj, "r_max", (int, float), where)),
        n_r=_need(obj, "n_r", int, where),
        n_theta=_need(obj, "n_theta", int, where),
    )


def encode_gauge_result(res: GaugeFixResult) -> dict:
    return {
        "residual": float(res.residual),
        "residual_fd": float(res.residual_fd),
        "homothety": float(res.homothety),
        "iterations": int(res.iterations),
        "trace": [float(t) for t in res.trace],
        "grid": encode_grid(res.u.grid),
        "gauge_sup": float(res.u.max_abs()),
    }


_CSV_HEADER = "ir,itheta,row,col,component,re,im"


def grid_field_csv(f: GridField) -> str:
    """Node-wise CSV dump: one row per node, matrix entry, and component."""
    if f.kind == "function":
        components = (("value", f.values),)
    elif f.kind == "mixed":
        components = (("dz", f.values[0]), ("dzbar", f.values[1]))
    else:
        components = ((f.kind, f.values),)
    lines = [_CSV_HEADER]
    n_r, n_t = f.grid.shape
    for name, vals in components:
        for ir in range(n_r):
            for it in range(n_t):
                for row in range(f.rank):
                    for col in range(f.rank):
                        z = vals[ir, it, row, col]
                        lines.append(
                            f"{ir},{it},{row},{col},{name},"
                            f"{format(z.real, '.17g')},{format(z.imag, '.17g')}"
                        )
    return "\n".join(lines) + "\n"


def parse_grid_field_csv(text: str, grid: DiskGrid, rank: int) -> GridField:
    """Rebuild a field from CSV rows; rows may arrive in any order and
    unmentioned entries stay zero. The component column decides the kind:
    'value' rows alone give a function, otherwise the dz/dzbar rows fill a
    mixed field."""
    n_r, n_t = grid.shape
    comps = {
        "value": np.zeros((n_r, n_t, rank, rank), dtype=complex),
        "dz": np.zeros((n_r, n_t, rank, rank), dtype=complex),
        "dzbar": np.zeros((n_r, n_t, rank, rank), dtype=complex),
    }
    seen = set()
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip() != _CSV_HEADER:
        raise InputError(f"CSV must start with header '{_CSV_HEADER}'")
    for lineno, line in enumerate(lines[1:], start=2):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 7:
            raise InputError(f"CSV line {lineno}: expected 7 fields, got {len(parts)}")
        try:
            ir, it, row, col = (int(p) for p in parts[:4])
            re_v, im_v = float(parts[5]), float(parts[6])
        except ValueError as exc:
            raise InputError(f"CSV line {lineno}: {exc}")
        comp = parts[4]
        if comp not in comps:
            raise InputError(f"CSV line {lineno}: unknown component '{comp}'")
        if not (0 <= ir < n_r and 0 <= it < n_t):
            raise InputError(f"CSV line {lineno}: node ({ir}, {it}) outside the grid")
        if not (0 <= row < rank and 0 <= col < rank):
            raise InputError(f"CSV line {lineno}: entry ({row}, {col}) outside rank {rank}")
        comps[comp][ir, it, row, col] = complex(re_v, im_v)
        seen.add(comp)
    if "value" in seen and (seen & {"dz", "dzbar"}):
        raise InputError("CSV mixes 'value' rows with form components")
    if seen == {"value"} or not seen:
        return GridField(grid, "function", comps["value"])
    return GridField(grid, "mixed", np.stack([comps["dz"], comps["dzbar"]]))


def trace_csv(trace) -> str:
    lines = ["iteration,residual"]
    for i, r in enumerate(trace, start=1):
        lines.append(f"{i},{format(float(r), '.17g')}")
    return "\n".join(lines) + "\n"


def model_check_csv(rows) -> str:
    """Rows of (h, max_f, max_g) per refinement level; the observed order is
    filled in between consecutive levels."""
    lines = ["h,max_f,max_g,observed_order"]
    prev = None
    for h, mf, mg in rows:
        if prev is None:
            order = ""
        else:
            h0, m0 = prev
            worst = max(mf, mg)
            worst0 = max(m0, 1e-300)
            order = format(math.log(worst0 / max(worst, 1e-300)) / math.log(h0 / h), ".17g")
        lines.append(
            f"{format(float(h), '.17g')},{format(float(mf), '.17g')},"
            f"{format(float(mg), '.17g')},{order}"
        )
        prev = (h, max(mf, mg))
    return "\n".join(lines) + "\n"


def frame_growth_csv(side: str, expected, slopes) -> str:
    lines = ["side,index,expected,slope"]
    for i, (e, s) in enumerate(zip(expected, slopes)):
        lines.append(f"{side},{i},{format(float(e), '.17g')},{format(float(s), '.17g')}")
    return "\n".join(lines) + "\n"
