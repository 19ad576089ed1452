"""Model harmonic-bundle fields near an irregular puncture, sampled on grids.

Everything here works in the orthonormal frame in which the metric is the
identity, so adjoints are plain conjugate transposes and the unitary part of
a connection form is skew-hermitian. The model built from diagonal polar
data is flat and its Higgs field is holomorphic; both facts are exact at the
level of the sampled coefficient formulas, so discrete curvature measures
pure finite-difference error and must decay at second order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg

from ._series import MatSeries, conjugate_series, exp_series, from_coeff, log_series
from .errors import GridTooCoarse, InputError, NonRegularLeading
from .grids import DiskGrid, GridField, diag_embed
from .polar import DiagonalMatrix, FormalGauge, LevelDecomposition, PuncturePolarData

# ---------------------------------------------------------------------------
# finite differences in polar coordinates


def fd_dz(grid: DiskGrid, values: np.ndarray, offset: int = 0) -> np.ndarray:
    """d/dz by centered differences; drops one radial ring at each end.

    Uses t = log r, where d/dz = e^{-i theta}/(2r) (d/dt - i d/dtheta); the
    angular direction is periodic. `offset` says how many rings the input
    has already lost relative to the grid, so nested calls pick up the right
    radii.
    """
    return _fd_polar(grid, values, offset, sign=-1.0)


def fd_dzbar(grid: DiskGrid, values: np.ndarray, offset: int = 0) -> np.ndarray:
    """d/dzbar by centered differences; same layout as fd_dz."""
    return _fd_polar(grid, values, offset, sign=1.0)


def _fd_polar(grid: DiskGrid, values: np.ndarray, offset: int, sign: float) -> np.ndarray:
    radii = grid.radii[offset : grid.n_r - offset]
    if values.shape[0] != radii.size:
        raise InputError("radial extent does not match the grid minus the offset")
    if values.shape[0] < 3 or values.shape[1] != grid.n_theta:
        raise GridTooCoarse("not enough nodes for a centered difference")
    dt = (values[2:] - values[:-2]) / (2.0 * grid.h_t)
    dth = (np.roll(values, -1, axis=1) - np.roll(values, 1, axis=1))[1:-1]
    dth = dth / (2.0 * grid.h_theta)
    extra = values.ndim - 2
    rad = radii[1:-1].reshape((-1, 1) + (1,) * extra)
    ang = np.exp(sign * 1j * grid.angles).reshape((1, -1) + (1,) * extra)
    return ang / (2.0 * rad) * (dt + sign * 1j * dth)


def _commutator(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return a @ b - b @ a


def _conj_t(a: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(a, -1, -2))


# ---------------------------------------------------------------------------
# the exact model attached to diagonal polar data


def _polar_sum(z: np.ndarray, entry_coeffs: np.ndarray) -> np.ndarray:
    """sum_i C_i z^{-i} for per-entry coefficient rows C_1..C_n.

    entry_coeffs has shape (n, r); result has shape z.shape + (r,).
    """
    n, r = entry_coeffs.shape
    acc = np.zeros(z.shape + (r,), dtype=complex)
    zinv = 1.0 / z
    power = np.ones_like(z)
    for i in range(n):
        power = power * zinv
        acc += power[..., None] * entry_coeffs[i]
    return acc


@dataclass(frozen=True)
class ModelFields:
    """Pointwise evaluators for the model fields of one puncture.

    All four forms are diagonal in the orthonormal frame. Methods accept any
    array of nonzero complex points and return coefficient matrices with two
    trailing rank axes; 1-forms come as a pair (dz component, dzbar
    component).
    """

    data: PuncturePolarData

    def _coeff_rows(self) -> np.ndarray:
        return np.array([c.vector() for c in self.data.coeffs])

    def higgs_dz(self, z: np.ndarray) -> np.ndarray:
        """dz coefficient of theta: (1/2) sum_i A_i z^{-i} - beta/(2z)."""
        z = np.asarray(z, dtype=complex)
        beta = np.array(self.data.weights)
        vals = 0.5 * _polar_sum(z, self._coeff_rows()) - beta / (2.0 * z[..., None])
        return diag_embed(vals)

    def dbar_dzbar(self, z: np.ndarray) -> np.ndarray:
        """dzbar coefficient of the holomorphic-structure operator."""
        z = np.asarray(z, dtype=complex)
        re_a1 = np.real(np.array(self.data.coeff(1).entries))
        return diag_embed(-re_a1 / (2.0 * np.conj(z)[..., None]))

    def unitary(self, z: np.ndarray) -> tuple:
        """Metric connection: dz coefficient ReA_1/(2z), dzbar coefficient
        its negative at zbar."""
        z = np.asarray(z, dtype=complex)
        re_a1 = np.real(np.array(self.data.coeff(1).entries))
        p = re_a1 / (2.0 * z[..., None])
        q = -re_a1 / (2.0 * np.conj(z)[..., None])
        return diag_embed(p), diag_embed(q)

    def higgs_pair(self, z: np.ndarray) -> tuple:
        """theta plus its adjoint: (dz coefficient, dzbar coefficient)."""
        z = np.asarray(z, dtype=complex)
        p = self.higgs_dz(z)
        beta = np.array(self.data.weights)
        zbar = np.conj(z)
        q_vals = 0.5 * _polar_sum(zbar, np.conj(self._coeff_rows())) - beta / (
            2.0 * zbar[..., None]
        )
        return p, diag_embed(q_vals)

    def connection(self, z: np.ndarray) -> tuple:
        """Full flat connection form: unitary part plus Higgs pair."""
        up, uq = self.unitary(z)
        hp, hq = self.higgs_pair(z)
        return up + hp, uq + hq


@dataclass(frozen=True)
class SampledModel:
    """Model fields of eval_model_fields, each sampled as a GridField."""

    higgs: GridField
    dbar: GridField
    unitary: GridField
    connection: GridField

    @property
    def grid(self) -> DiskGrid:
        return self.higgs.grid


def eval_model_fields(data: PuncturePolarData, grid: DiskGrid) -> SampledModel:
    """Sample all model forms of the puncture data at every grid node."""
    model = ModelFields(data)
    z = grid.nodes()
    up, uq = model.unitary(z)
    cp, cq = model.connection(z)
    return SampledModel(
        higgs=GridField(grid, "dz", model.higgs_dz(z)),
        dbar=GridField(grid, "dzbar", model.dbar_dzbar(z)),
        unitary=GridField(grid, "mixed", np.stack([up, uq])),
        connection=GridField(grid, "mixed", np.stack([cp, cq])),
    )


# ---------------------------------------------------------------------------
# discrete curvature


def discrete_curvature(connection) -> tuple:
    """Max Frobenius norms of the curvature F and the pseudo-curvature G of a
    sampled connection form, via centered differences on interior rings.

    The splitting into metric and hermitian parts assumes the orthonormal
    frame: with omega = P dz + Q dzbar, the Higgs coefficient is
    p = (P + Q^H)/2 and the antiholomorphic coefficient q = (Q - P^H)/2;
    G doubles the dzbar dz coefficient of the squared operator dbar + theta.
    """
    if isinstance(connection, SampledModel):
        connection = connection.connection
    conn = connection.as_mixed()
    grid = conn.grid
    if grid.n_r < 8 or grid.n_theta < 8:
        raise GridTooCoarse("curvature needs at least 8 nodes per direction")
    p = conn.values[0]
    q = conn.values[1]
    f_coeff = fd_dz(grid, q) - fd_dzbar(grid, p) + _commutator(p, q)[1:-1]
    higgs_p = 0.5 * (p + _conj_t(q))
    dbar_q = 0.5 * (q - _conj_t(p))
    g_coeff = 2.0 * (fd_dzbar(grid, higgs_p) + _commutator(dbar_q, higgs_p)[1:-1])
    f_max = float(np.sqrt((np.abs(f_coeff) ** 2).sum(axis=(-2, -1))).max())
    g_max = float(np.sqrt((np.abs(g_coeff) ** 2).sum(axis=(-2, -1))).max())
    return f_max, g_max


# ---------------------------------------------------------------------------
# weighted Sobolev-type norms


def _covariant_pair(
    grid: DiskGrid, values: np.ndarray, offset: int, model: Optional[ModelFields]
) -> list:
    """dz and dzbar components of one covariant derivative, each one radial
    ring shorter per side than the input.

    The derivative is d plus the adjoint action of the model metric
    connection; with no model data it is the plain differential.
    """
    dz_comp = fd_dz(grid, values, offset)
    dzbar_comp = fd_dzbar(grid, values, offset)
    if model is not None:
        z = grid.nodes()[offset + 1 : grid.n_r - offset - 1]
        up, uq = model.unitary(z)
        inner = values[1:-1]
        dz_comp = dz_comp + _commutator(up, inner)
        dzbar_comp = dzbar_comp + _commutator(uq, inner)
    return [dz_comp, dzbar_comp]


def weighted_norm(
    f: GridField,
    levels: LevelDecomposition,
    p: float = 2.0,
    k: int = 0,
    delta: float = 0.0,
    hat: bool = False,
    data: Optional[PuncturePolarData] = None,
) -> float:
    """Weighted L^p norm with k covariant derivatives.

    Entry (a, b) at derivative order j carries the extra weight
    r^{-level(a,b) * (k - j)}; the hat variant prices level-0 entries like
    level-1 ones. The L^p integrand divides by r^{delta + 2/p}, so powers of
    r have norm scaling like r_min^{power - delta} when that diverges.
    Derivatives use the model metric connection built from `data` when
    given, plain differences otherwise; each one consumes a radial ring per
    side, and every term is integrated over the interior all terms share.
    1-form components enter through the pointwise magnitude
    (|dz part|^2 + |dzbar part|^2)^{1/2}.
    """
    if k < 0:
        raise InputError("derivative count must be nonnegative")
    grid = f.grid
    if k >= 1 and (grid.n_r < 16 or grid.n_theta < 16):
        raise GridTooCoarse("weighted norms with derivatives need 16 nodes per direction")
    if levels.level.shape != (f.rank, f.rank):
        raise InputError("level decomposition rank does not match the field")
    if grid.n_r <= 2 * k + 2:
        raise GridTooCoarse("grid too small for the requested derivative count")
    lvl = levels.level.astype(float)
    if hat:
        lvl = np.where(lvl == 0.0, 1.0, lvl)
    model = ModelFields(data) if data is not None else None

    radii = grid.radii[k : grid.n_r - k] if k else grid.radii
    quad = grid.weights[k : grid.n_r - k] if k else grid.weights

    comps = [f.values[0], f.values[1]] if f.kind == "mixed" else [f.values]
    total = 0.0
    for j in range(k + 1):
        trim = k - j
        mag2 = np.zeros((radii.size, grid.n_theta, f.rank, f.rank))
        for comp in comps:
            kept = comp[trim : comp.shape[0] - trim] if trim else comp
            mag2 += np.abs(kept) ** 2
        rw = radii[:, None, None, None] ** (-lvl[None, None] * (k - j))
        entry = np.sqrt(mag2) * rw
        frob = np.sqrt((entry**2).sum(axis=(-2, -1)))
        scaled = frob / radii[:, None] ** (delta + 2.0 / p)
        total += float(((scaled**p) * quad).sum())
        if j < k:
            comps = [d for c in comps for d in _covariant_pair(grid, c, j, model)]
    return total ** (1.0 / p)


# ---------------------------------------------------------------------------
# canonical frame growth rates


def _irregular_unit_factor(data: PuncturePolarData, z: np.ndarray) -> np.ndarray:
    """exp of the antiderivative pair of the order >= 2 coefficients; unit
    modulus because the exponent is x minus its conjugate."""
    z = np.asarray(z, dtype=complex)
    expo = np.zeros(z.shape + (data.rank,), dtype=complex)
    for i in range(2, data.order + 1):
        a = np.array(data.coeff(i).entries)
        denom = 2.0 * (i - 1)
        expo += a / (denom * z[..., None] ** (i - 1))
        expo -= np.conj(a) / (denom * np.conj(z)[..., None] ** (i - 1))
    factor = np.exp(expo)
    if not np.allclose(np.abs(factor), 1.0, atol=1e-12):
        raise AssertionError("irregular frame factor drifted off the unit circle")
    return factor


def dolbeault_frame_values(data: PuncturePolarData, z: np.ndarray) -> np.ndarray:
    """Entries of the holomorphically trivializing frame in the orthonormal
    one; |value_i| = |z|^{alpha_i} with the unit factors evaluated rather
    than dropped."""
    z = np.asarray(z, dtype=complex)
    mu = data.mu
    m = np.floor(np.real(mu))
    absz = np.abs(z)[..., None]
    base = z[..., None] ** (-m) * absz ** np.real(mu)
    phase = absz ** (-1j * np.imag(mu))
    return base * phase * _irregular_unit_factor(data, z)


def derham_frame_values(data: PuncturePolarData, z: np.ndarray) -> np.ndarray:
    """Entries of the flat multivalued frame along a ray; the metric length
    of entry i is |z|^{beta_i} with the unit factors evaluated rather than
    dropped."""
    z = np.asarray(z, dtype=complex)
    mu = data.mu
    beta = np.array(data.weights)
    absz = np.abs(z)[..., None]
    base = absz ** (beta + 1j * np.imag(mu))
    return base * _irregular_unit_factor(data, z)


def frame_growth(data: PuncturePolarData, side: str, grid: DiskGrid) -> np.ndarray:
    """Observed growth exponents of the canonical frame along the ray
    theta = 0, one slope per rank index, by log-log regression over the
    grid radii."""
    if side not in ("dolbeault", "derham"):
        raise InputError(f"unknown side {side!r}")
    z = grid.radii.astype(complex)
    vals = (
        dolbeault_frame_values(data, z)
        if side == "dolbeault"
        else derham_frame_values(data, z)
    )
    logs = np.log(np.abs(vals))
    slopes = np.polyfit(np.log(grid.radii), logs, 1)[0]
    return np.atleast_1d(slopes)


# ---------------------------------------------------------------------------
# meromorphic Higgs input data and the initial approximate frame


@dataclass(frozen=True)
class MeromorphicHiggs:
    """Higgs field with diagonal polar part and a full-matrix holomorphic
    tail: theta = (sum_i B_i z^{-i} + sum_m H_m z^m) dz.

    polar stores B_1 first; tail stores H_0, H_1, ... and may be empty.
    weights are the parabolic weights of the underlying extension.
    """

    rank: int
    order: int
    polar: tuple
    weights: tuple
    tail: np.ndarray

    def __post_init__(self):
        if self.order < 1 or self.rank < 1:
            raise InputError("need positive rank and pole order")
        if len(self.polar) != self.order:
            raise InputError("polar part must have one coefficient per order")
        for c in self.polar:
            if not isinstance(c, DiagonalMatrix) or c.rank != self.rank:
                raise InputError("polar coefficients must be diagonal of matching rank")
        if len(self.weights) != self.rank:
            raise InputError("one weight per rank index")
        if any(not 0.0 <= w < 1.0 for w in self.weights):
            raise InputError("weights must lie in [0, 1)")
        tail = np.asarray(self.tail, dtype=complex)
        if tail.ndim != 3 or tail.shape[1:] != (self.rank, self.rank):
            raise InputError("tail must be a stack of rank x rank matrices")
        object.__setattr__(self, "tail", tail)
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))

    def coeff(self, i: int) -> DiagonalMatrix:
        """Polar coefficient of z^{-i}, 1-indexed."""
        return self.polar[i - 1]

    def to_series(self) -> MatSeries:
        n = self.order
        m = self.tail.shape[0]
        coeffs = np.zeros((n + max(m, 1), self.rank, self.rank), dtype=complex)
        for i in range(1, n + 1):
            coeffs[n - i] = self.coeff(i).matrix()
        if m:
            coeffs[n : n + m] = self.tail
        return MatSeries(-n, coeffs)


def build_initial_frame(higgs: MeromorphicHiggs, n_order: int, grid: DiskGrid) -> tuple:
    """Holomorphic gauge diagonalizing the Higgs field through z^{n_order},
    plus the perturbation of the resulting connection form relative to the
    model, sampled on the grid in the weighted orthonormal frame.

    The gauge acts by conjugation only. Each off-diagonal coefficient at
    order z^m is removed against the leading polar coefficient, which must
    therefore be regular; afterwards the off-diagonal part of the field
    vanishes to order n_order + 1 and the sampled perturbation decays at
    least that fast up to the bounded weight twist.
    """
    if n_order < 0:
        raise InputError("diagonalization order must be nonnegative")
    n = higgs.order
    r = higgs.rank
    lead = np.array(higgs.coeff(n).entries)
    gaps = lead[:, None] - lead[None, :]
    off = ~np.eye(r, dtype=bool)
    if np.any(gaps[off] == 0):
        raise NonRegularLeading("leading polar coefficient has repeated entries")

    work_trunc = n_order + n
    series = higgs.to_series().truncate(work_trunc)
    elementary = []
    for m in range(0, n_order + 1):
        c = series.coeff(m)
        u = np.zeros_like(c)
        u[off] = c[off] / gaps[off]
        if np.any(u):
            step = from_coeff(m + n, u)
            elementary.append(step)
            series = conjugate_series(step, series, work_trunc)

    u_coeffs = np.zeros((work_trunc + 1, r, r), dtype=complex)
    if elementary:
        g_total = exp_series(elementary[0], work_trunc)
        for step in elementary[1:]:
            g_total = g_total.mul(exp_series(step, work_trunc), work_trunc)
        u_total = log_series(g_total, work_trunc)
        for j in range(1, work_trunc + 1):
            u_coeffs[j] = u_total.coeff(j)
    gauge = FormalGauge(rank=r, trunc=work_trunc, coeffs=u_coeffs)

    # transformed field, evaluated through the exact group element per node
    z = grid.nodes()
    u_nodes = np.zeros(z.shape + (r, r), dtype=complex)
    for j in range(work_trunc, 0, -1):
        u_nodes = u_nodes * z[..., None, None] + u_coeffs[j]
    u_nodes = u_nodes * z[..., None, None]
    g_nodes = np.empty_like(u_nodes)
    g_inv = np.empty_like(u_nodes)
    for idx in np.ndindex(z.shape):
        g_nodes[idx] = scipy.linalg.expm(u_nodes[idx])
        g_inv[idx] = scipy.linalg.expm(-u_nodes[idx])
    theta_new = g_nodes @ _eval_series_nodes(higgs.to_series(), z) @ g_inv

    alpha = np.array(higgs.weights)
    lam = np.array(higgs.coeff(1).entries)
    absz = np.abs(z)[..., None, None]
    wt = absz ** (alpha[:, None] - alpha[None, :])
    diag = np.arange(r)

    # connection form in the frame e_i = s_i / |z|^{alpha_i}
    p_full = theta_new * wt
    q_full = _conj_t(theta_new) * np.swapaxes(wt, -1, -2)
    p_full[..., diag, diag] += alpha / (2.0 * z[..., None])
    q_full[..., diag, diag] -= alpha / (2.0 * np.conj(z)[..., None])

    # model reference with the same polar data and weights
    p_ref = np.zeros_like(p_full)
    q_ref = np.zeros_like(q_full)
    p_ref[..., diag, diag] = (lam + 0.5 * alpha) / z[..., None]
    q_ref[..., diag, diag] = (np.conj(lam) - 0.5 * alpha) / np.conj(z)[..., None]
    for i in range(2, n + 1):
        b = np.array(higgs.coeff(i).entries)
        p_ref[..., diag, diag] += b / z[..., None] ** i
        q_ref[..., diag, diag] += np.conj(b) / np.conj(z)[..., None] ** i

    a = GridField(grid, "mixed", np.stack([p_full - p_ref, q_full - q_ref]))
    return gauge, a


def _eval_series_nodes(series: MatSeries, z: np.ndarray) -> np.ndarray:
    """Evaluate a finite Laurent polynomial at every node."""
    out = np.zeros(z.shape + (series.rank, series.rank), dtype=complex)
    for j in range(series.min_order, series.max_order + 1):
        c = series.coeff(j)
        if np.any(c):
            out += z[..., None, None] ** j * c
    return out
