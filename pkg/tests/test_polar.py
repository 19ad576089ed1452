"""Level decomposition and formal polar normalization."""

from __future__ import annotations

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from wildhodge import (
    DiagonalMatrix,
    FormalConnection,
    InputError,
    NonSemisimpleLeading,
    PuncturePolarData,
    TruncationTooShort,
    end_levels,
    normalize_polar,
)

from .oracles import gauge_action_oracle, series_coeff


def make_data(coeff_vectors, weights=None):
    """coeff_vectors lists the diagonals of A_1..A_n."""
    rank = len(coeff_vectors[0])
    if weights is None:
        weights = (0.0,) * rank
    mats = tuple(DiagonalMatrix(tuple(v)) for v in coeff_vectors)
    return PuncturePolarData(rank, len(mats), mats, tuple(weights))


class TestDataValidation:
    def test_weight_out_of_range(self):
        with pytest.raises(InputError):
            make_data([(1.0, 2.0)], weights=(0.0, 1.0))

    def test_coefficient_count_mismatch(self):
        with pytest.raises(InputError):
            PuncturePolarData(2, 2, (DiagonalMatrix((1, 2)),), (0.0, 0.0))

    def test_rank_mismatch_in_coeff(self):
        with pytest.raises(InputError):
            PuncturePolarData(3, 1, (DiagonalMatrix((1, 2)),), (0.0, 0.0, 0.0))

    def test_residue_accessor(self):
        data = make_data([(1.0, 2.0), (3.0, 4.0)])
        assert np.allclose(data.mu, [1.0, 2.0])
        assert np.allclose(data.coeff(2).vector(), [3.0, 4.0])


class TestEndLevels:
    def test_scalar_coefficients_level_zero(self):
        data = make_data([(2.0, 2.0, 2.0), (5.0j, 5.0j, 5.0j)])
        dec = end_levels(data)
        assert np.all(dec.level == 0)
        assert dec.min_gap == {}

    def test_rank3_order2_example(self):
        data = make_data([(3.0, 4.0, 5.0), (1.0, 1.0, 2.0)])
        dec = end_levels(data)
        assert dec.level[0, 1] == 1
        assert dec.level[0, 2] == 2
        assert dec.level[1, 2] == 2
        assert np.all(np.diag(dec.level) == 0)
        assert dec.min_gap[1] == pytest.approx(1.0)
        assert dec.min_gap[2] == pytest.approx(1.0)

    def test_regular_leading_all_levels_max(self):
        data = make_data([(0.0, 0.0), (1.0, -1.0)])
        dec = end_levels(data)
        assert dec.level[0, 1] == 2 and dec.level[1, 0] == 2
        assert dec.min_gap[2] == pytest.approx(2.0)

    def test_higher_coeffs_agree_above_level(self):
        rng = np.random.default_rng(7)
        vecs = [rng.integers(-2, 3, size=4).astype(float) for _ in range(3)]
        data = make_data(vecs)
        dec = end_levels(data)
        for a in range(4):
            for b in range(4):
                k = dec.level[a, b]
                for j in range(k + 1, 4):
                    assert vecs[j - 1][a] == vecs[j - 1][b]
                if k >= 1:
                    assert vecs[k - 1][a] != vecs[k - 1][b]

    @given(st.permutations(list(range(4))), st.integers(0, 2**32 - 1))
    @settings(max_examples=25, deadline=None)
    def test_permutation_equivariance(self, perm, seed):
        rng = np.random.default_rng(seed)
        vecs = [rng.integers(-1, 2, size=4).astype(float) for _ in range(2)]
        dec = end_levels(make_data(vecs))
        perm = list(perm)
        dec_p = end_levels(make_data([v[perm] for v in vecs]))
        assert np.array_equal(dec_p.level, dec.level[np.ix_(perm, perm)])
        assert dec_p.min_gap == dec.min_gap


def random_regular_connection(rng, rank, order, trunc, spread=2.0):
    """Random formal connection whose leading term has well-separated spectrum."""
    coeffs = rng.standard_normal((order + trunc + 1, rank, rank)) + 1j * rng.standard_normal(
        (order + trunc + 1, rank, rank)
    )
    lead_eigs = spread * (np.arange(rank) + 1) + 1j * rng.standard_normal(rank)
    g = rng.standard_normal((rank, rank)) + 1j * rng.standard_normal((rank, rank))
    coeffs[0] = g @ np.diag(lead_eigs) @ np.linalg.inv(g)
    return FormalConnection(rank, order, trunc, coeffs)


def assert_oracle_reproduces(conn, gauge, normal, tol=1e-10):
    """Replay the gauge with the dict-based series oracle and compare."""
    basis_inv = np.linalg.inv(normal.basis)
    conn_dict = {
        j: basis_inv @ conn.coeff(j) @ normal.basis
        for j in range(-conn.order, conn.trunc + 1)
    }
    u_dict = {j: gauge.coeff(j) for j in range(1, gauge.trunc + 1)}
    out = gauge_action_oracle(u_dict, conn_dict, conn.trunc, conn.rank)
    scale = max(1.0, max(float(np.abs(c).max()) for c in conn_dict.values()))
    for j in range(-conn.order, normal.connection.trunc + 1):
        got = series_coeff(out, j, conn.rank)
        want = normal.connection.coeff(j)
        assert np.abs(got - want).max() <= tol * scale, f"order {j} mismatch"


class TestNormalizePolar:
    def test_already_diagonal_is_fixed_point(self):
        data = make_data([(0.5, -0.25), (1.0, -1.0)])
        conn = FormalConnection.from_polar(data, trunc=4)
        gauge, normal = normalize_polar(conn)
        assert gauge.max_abs() == 0.0
        assert np.array_equal(normal.basis, np.eye(2))
        for j in range(-2, 3):
            assert np.allclose(normal.connection.coeff(j), conn.coeff(j), atol=1e-15)

    def test_rank2_order2_offdiagonal_residue(self):
        coeffs = np.zeros((7, 2, 2), dtype=complex)
        coeffs[0] = np.diag([1.0, -1.0])
        coeffs[1] = np.array([[0.0, 1.0], [1.0, 0.0]])
        conn = FormalConnection(2, 2, 4, coeffs)
        gauge, normal = normalize_polar(conn)
        assert np.allclose(gauge.coeff(1), [[0.0, 0.5], [-0.5, 0.0]], atol=1e-14)
        assert np.allclose(normal.connection.coeff(-2), np.diag([1.0, -1.0]), atol=1e-14)
        assert np.abs(normal.connection.coeff(-1)).max() < 1e-14
        assert np.allclose(
            normal.connection.coeff(0), [[0.5, -0.5], [0.5, -0.5]], atol=1e-13
        )
        assert normal.residual < 1e-13
        assert_oracle_reproduces(conn, gauge, normal, tol=1e-13)

    def test_rank2_order2_sympy_expansion(self):
        coeffs = np.zeros((7, 2, 2), dtype=complex)
        coeffs[0] = np.diag([1.0, -1.0])
        coeffs[1] = np.array([[0.0, 1.0], [1.0, 0.0]])
        conn = FormalConnection(2, 2, 4, coeffs)
        gauge, normal = normalize_polar(conn)

        z = sp.symbols("z")
        u = sp.Matrix(2, 2, lambda a, b: sp.nsimplify(complex(gauge.coeff(1)[a, b]), rational=True)) * z
        g = u.exp()
        ginv = g.inv()
        a_form = sp.Matrix([[1, 0], [0, -1]]) / z**2 + sp.Matrix([[0, 1], [1, 0]]) / z
        new = g * a_form * ginv - g.diff(z) * ginv
        shifted = sp.expand(new * z**2)
        for a in range(2):
            for b in range(2):
                ser = sp.series(shifted[a, b], z, 0, 5).removeO()
                poly = sp.Poly(sp.expand(ser), z)
                for j in range(-2, 3):
                    want = complex(poly.coeff_monomial(z ** (j + 2)))
                    got = complex(normal.connection.coeff(j)[a, b])
                    assert abs(got - want) < 1e-12

    def test_nilpotent_leading_rejected(self):
        coeffs = np.zeros((5, 2, 2), dtype=complex)
        coeffs[0] = np.array([[0.0, 1.0], [0.0, 0.0]])
        conn = FormalConnection(2, 2, 2, coeffs)
        with pytest.raises(NonSemisimpleLeading):
            normalize_polar(conn)

    def test_truncation_too_short(self):
        coeffs = np.zeros((4, 2, 2), dtype=complex)
        coeffs[0] = np.diag([1.0, 2.0])
        conn = FormalConnection(2, 3, 0, coeffs)
        with pytest.raises(TruncationTooShort):
            normalize_polar(conn)

    def test_leading_eigenvalues_lex_sorted(self):
        rng = np.random.default_rng(3)
        conn = random_regular_connection(rng, 3, 2, 4)
        _, normal = normalize_polar(conn)
        lead = normal.leading
        keys = [(v.real, v.imag) for v in lead]
        assert keys == sorted(keys)

    @pytest.mark.parametrize("rank,order", [(2, 2), (3, 2), (3, 3), (2, 4)])
    def test_random_oracle_and_idempotence(self, rank, order):
        rng = np.random.default_rng(100 * rank + order)
        for _ in range(5):
            conn = random_regular_connection(rng, rank, order, 2 * order)
            gauge, normal = normalize_polar(conn)
            assert normal.residual < 1e-10
            assert_oracle_reproduces(conn, gauge, normal, tol=1e-9)
            # polar part commutes with the leading diagonal: off-diagonal gone
            for i in range(1, order):
                c = normal.connection.coeff(-i)
                assert np.abs(c - np.diag(np.diag(c))).max() < 1e-9
            gauge2, normal2 = normalize_polar(normal.connection)
            assert gauge2.max_abs() < 1e-9

    def test_semisimple_repeated_leading_allowed(self):
        # leading term diag(1, 1, 3) conjugated by a generic matrix is
        # semisimple with a repeated eigenvalue; cluster block survives
        rng = np.random.default_rng(11)
        g = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
        coeffs = np.zeros((6, 3, 3), dtype=complex)
        coeffs[0] = g @ np.diag([1.0, 1.0, 3.0]) @ np.linalg.inv(g)
        coeffs[1] = rng.standard_normal((3, 3))
        conn = FormalConnection(3, 2, 3, coeffs)
        gauge, normal = normalize_polar(conn)
        res = normal.connection.coeff(-1)
        # entries joining the cluster {1,1} to eigenvalue 3 must vanish
        assert abs(res[0, 2]) < 1e-9 and abs(res[1, 2]) < 1e-9
        assert abs(res[2, 0]) < 1e-9 and abs(res[2, 1]) < 1e-9
        assert_oracle_reproduces(conn, gauge, normal, tol=1e-9)
