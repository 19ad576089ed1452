"""Round trips and determinism of the JSON and CSV wire formats."""

import json

import numpy as np
import pytest

from wildhodge import InputError
from wildhodge.correspondence import HiggsPolarData
from wildhodge.grids import DiskGrid, GridField
from wildhodge.orbit import OrbitDiagonalProblem, OrbitSolution, builtin_example_report
from wildhodge.polar import DiagonalMatrix, FormalConnection, FormalGauge, PuncturePolarData
from wildhodge.serialization import (
    decode_connection,
    decode_curve,
    decode_gauge,
    decode_grid,
    decode_higgs,
    decode_orbit_problem,
    decode_orbit_solution,
    decode_puncture,
    decode_subsum_report,
    dumps,
    encode_connection,
    encode_curve,
    encode_example_report,
    encode_gauge,
    encode_grid,
    encode_higgs,
    encode_orbit_problem,
    encode_orbit_solution,
    encode_puncture,
    encode_subsum_report,
    grid_field_csv,
    loads,
    model_check_csv,
    parse_grid_field_csv,
    trace_csv,
)
from wildhodge.stability import CurveConfig, subsum_check


def sample_puncture():
    return PuncturePolarData(
        rank=2,
        order=2,
        coeffs=(
            DiagonalMatrix((0.3 + 0.1j, -0.2 + 0.7j)),
            DiagonalMatrix((1.0 + 0.0j, -1.0 + 0.0j)),
        ),
        weights=(0.25, 0.5),
    )


class TestJsonWriter:
    def test_keys_sorted_and_deterministic(self):
        text = dumps({"zeta": 1, "alpha": 2, "mid": [1, 2.5, True, None]})
        assert text == dumps({"alpha": 2, "mid": [1, 2.5, True, None], "zeta": 1})
        assert text.index('"alpha"') < text.index('"mid"') < text.index('"zeta"')

    def test_floats_carry_seventeen_digits(self):
        assert "0.10000000000000001" in dumps({"x": 0.1})

    def test_floats_round_trip_exactly(self):
        vals = [1 / 3, 2.0**-40, 1e300, -0.0, 5.5]
        back = loads(dumps({"v": vals}))["v"]
        for a, b in zip(vals, back):
            assert float(a) == float(b)

    def test_emitted_text_is_valid_json(self):
        obj = {"a": [1.5, {"b": "text\nwith\"escapes"}], "c": []}
        assert json.loads(dumps(obj)) == obj

    def test_parse_error_reports_position(self):
        with pytest.raises(InputError, match="line 1"):
            loads("{bad json")

    def test_nonfinite_rejected(self):
        with pytest.raises(InputError):
            dumps({"x": float("inf")})


class TestPolarRoundTrips:
    def test_puncture(self):
        data = sample_puncture()
        assert decode_puncture(loads(dumps(encode_puncture(data)))) == data

    def test_higgs(self):
        data = HiggsPolarData(
            rank=2,
            order=2,
            higgs_coeffs=(
                DiagonalMatrix((0.1 + 0.2j, -0.1 - 0.2j)),
                DiagonalMatrix((0.5 + 0.0j, -0.5 + 0.0j)),
            ),
            weights=(0.0, 0.75),
            residue_eigs=(0.1 + 0.2j, -0.1 - 0.2j),
        )
        assert decode_higgs(loads(dumps(encode_higgs(data)))) == data

    def test_connection(self):
        rng = np.random.default_rng(1)
        coeffs = rng.standard_normal((5, 2, 2)) + 1j * rng.standard_normal((5, 2, 2))
        conn = FormalConnection(rank=2, order=2, trunc=2, coeffs=coeffs)
        back = decode_connection(loads(dumps(encode_connection(conn))))
        assert back.rank == conn.rank and back.order == conn.order
        assert np.array_equal(back.coeffs, conn.coeffs)

    def test_gauge(self):
        rng = np.random.default_rng(2)
        coeffs = rng.standard_normal((3, 2, 2)) + 1j * rng.standard_normal((3, 2, 2))
        coeffs[0] = 0.0
        g = FormalGauge(rank=2, trunc=2, coeffs=coeffs)
        back = decode_gauge(loads(dumps(encode_gauge(g))))
        assert back.fix_origin == g.fix_origin
        assert np.array_equal(back.coeffs, g.coeffs)

    def test_missing_field_is_named(self):
        with pytest.raises(InputError, match="coeffs"):
            decode_puncture({"rank": 2, "order": 1, "weights": [0.0, 0.0]})

    def test_boolean_does_not_pass_for_int(self):
        obj = encode_puncture(sample_puncture())
        obj["rank"] = True
        with pytest.raises(InputError):
            decode_puncture(obj)


class TestStabilityAndOrbit:
    def test_curve_round_trip(self):
        cfg = CurveConfig(punctures=(sample_puncture(), sample_puncture()), c1=-1)
        assert decode_curve(loads(dumps(encode_curve(cfg)))) == cfg

    def test_subsum_report_round_trip(self):
        cfg = CurveConfig(punctures=(sample_puncture(),))
        rep = subsum_check(cfg)
        assert decode_subsum_report(loads(dumps(encode_subsum_report(rep)))) == rep

    def test_orbit_problem_round_trip(self):
        prob = OrbitDiagonalProblem(
            sigma=(1.0 + 0.0j, 2.0 - 1.0j), lam=DiagonalMatrix((1.5 - 0.5j, 1.5 - 0.5j))
        )
        assert decode_orbit_problem(loads(dumps(encode_orbit_problem(prob)))) == prob

    def test_orbit_solution_round_trip(self):
        sol = OrbitSolution(
            B=np.array([[1.0 + 0j, 2.0], [0.5j, -1.0]]),
            residuals=(1e-12, 2e-13),
            gauge_balanced=True,
            iterations=7,
            restart_index=0,
        )
        back = decode_orbit_solution(loads(dumps(encode_orbit_solution(sol))))
        assert np.array_equal(back.B, sol.B)
        assert back.residuals == sol.residuals
        assert back.iterations == 7

    def test_example_report_encodes(self):
        rep = builtin_example_report()
        obj = loads(dumps(encode_example_report(rep)))
        assert obj["passed"] is True
        assert obj["condition1"] is True
        assert obj["subsums"]["generic"] is True


class TestGridFieldCsv:
    def test_mixed_round_trip_is_exact(self):
        grid = DiskGrid(0.2, 1.0, 4, 4)
        rng = np.random.default_rng(3)
        vals = rng.standard_normal((2, 4, 4, 2, 2)) + 1j * rng.standard_normal((2, 4, 4, 2, 2))
        f = GridField(grid, "mixed", vals)
        back = parse_grid_field_csv(grid_field_csv(f), grid, 2)
        assert back.kind == "mixed"
        assert np.array_equal(back.values, f.values)

    def test_function_round_trip(self):
        grid = DiskGrid(0.2, 1.0, 4, 4)
        vals = np.arange(16.0).reshape(4, 4, 1, 1) * (1 + 2j)
        f = GridField(grid, "function", vals)
        back = parse_grid_field_csv(grid_field_csv(f), grid, 1)
        assert back.kind == "function"
        assert np.array_equal(back.values, f.values)

    def test_sparse_rows_fill_zeros(self):
        grid = DiskGrid(0.2, 1.0, 4, 4)
        text = "ir,itheta,row,col,component,re,im\n1,2,0,1,dzbar,3.5,-1\n"
        f = parse_grid_field_csv(text, grid, 2)
        assert f.kind == "mixed"
        assert f.values[1, 1, 2, 0, 1] == 3.5 - 1j
        assert np.count_nonzero(f.values) == 1

    def test_bad_rows_report_line(self):
        grid = DiskGrid(0.2, 1.0, 4, 4)
        header = "ir,itheta,row,col,component,re,im\n"
        with pytest.raises(InputError, match="line 2"):
            parse_grid_field_csv(header + "9,0,0,0,value,1,0\n", grid, 1)
        with pytest.raises(InputError, match="component"):
            parse_grid_field_csv(header + "0,0,0,0,dtheta,1,0\n", grid, 1)
        with pytest.raises(InputError, match="header"):
            parse_grid_field_csv("nope\n", grid, 1)
        with pytest.raises(InputError, match="mixes"):
            parse_grid_field_csv(
                header + "0,0,0,0,value,1,0\n0,0,0,0,dz,1,0\n", grid, 1
            )

    def test_grid_round_trip(self):
        grid = DiskGrid(0.05, 0.9, 12, 8)
        back = decode_grid(loads(dumps(encode_grid(grid))))
        assert (back.r_min, back.r_max, back.n_r, back.n_theta) == (
            grid.r_min,
            grid.r_max,
            grid.n_r,
            grid.n_theta,
        )


class TestAuxCsv:
    def test_trace_csv_shape(self):
        text = trace_csv((0.5, 0.1, 1e-9))
        lines = text.strip().splitlines()
        assert lines[0] == "iteration,residual"
        assert lines[1].startswith("1,") and lines[3].startswith("3,")

    def test_model_check_orders(self):
        rows = [(0.2, 1e-2, 2e-2), (0.1, 2.5e-3, 5e-3)]
        text = model_check_csv(rows)
        lines = text.strip().splitlines()
        assert lines[0] == "h,max_f,max_g,observed_order"
        assert lines[1].endswith(",")
        order = float(lines[2].split(",")[-1])
        assert order == pytest.approx(2.0)
