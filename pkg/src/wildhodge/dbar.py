"""Numerical dbar solvers on annular grids and the model gauge-fixing loop.

The solid Cauchy transform here is normalized as T0 g(z) =
(1/pi) integral of g(u)/(z - u) over the annulus, so that dbar(T0 g) = g in
the continuum. On an annulus the inversion holds up to addition of a
function holomorphic across the hole; all residual checks therefore test
the equation, never pointwise values of f.

The kernel depends on angles only through their difference, so each ring
pair reduces to a circular convolution done by FFT; the total cost is
O(n_r^2 n_theta log n_theta). Quadrature is node value times exact cell
area, corrected near the diagonal: the singular self-cell is integrated
exactly through a boundary (Stokes) integral and the eight neighbor cells
through 4 x 4 geometric-midpoint subdivision. The corrections are invariant
under rotation, so they are computed once per radial index and applied with
an angular roll.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    InputError,
    NoContraction,
    OscillationUnresolved,
    ResonantWeight,
)
from .fields import fd_dzbar
from .grids import DiskGrid, GridField
from .polar import PuncturePolarData, end_levels

RESONANCE_TOL = 1e-6
PHASE_LIMIT = math.pi / 4.0
GL_POINTS = 16
SUBDIV = 4


def _int_dist(x: float) -> float:
    return abs(x - round(x))


@dataclass(frozen=True)
class DbarProblem:
    """One entrywise dbar equation: level k, twist lambda, right-hand side.

    level 0 solves dbar f = g, level 1 solves dbar f + (lambda/2) f/zbar = g,
    level k >= 2 solves dbar f + (lambda/zbar^k) f = g. delta is the decay
    weight the solution is controlled in and p > 2 the integrability
    exponent; both enter the solvability conditions, not the quadrature.
    """

    level: int
    twist: complex
    rhs: GridField
    delta: float
    p: float = 4.0

    def __post_init__(self):
        if self.level < 0:
            raise InputError("level must be nonnegative")
        if self.p <= 2.0:
            raise InputError("exponent p must exceed 2")
        if self.rhs.kind not in ("dzbar", "function"):
            raise InputError("right-hand side must be a dzbar coefficient field")
        if self.level == 0 and _int_dist(self.delta) < RESONANCE_TOL:
            raise ResonantWeight(f"delta = {self.delta} is within {RESONANCE_TOL} of an integer")
        if self.level == 1:
            gap = _int_dist(self.delta - complex(self.twist).real)
            if gap < RESONANCE_TOL:
                raise ResonantWeight(
                    f"delta - Re(lambda) = {self.delta - complex(self.twist).real}"
                    " is too close to an integer"
                )


# ---------------------------------------------------------------------------
# quadrature pieces


def _self_cell_integrals(grid: DiskGrid) -> np.ndarray:
    """Exact integral of dA(u)/(z - u) over each node's own cell, with z at
    the node; by rotational symmetry z can be taken real positive.

    Stokes turns the area integral into (1/2i) times the boundary integral
    of (ubar - zbar)/(z - u) du; the integrand is bounded, so 16-point
    Gauss-Legendre per edge resolves it to near machine accuracy.
    """
    x, w = np.polynomial.legendre.leggauss(GL_POINTS)
    half = 0.5 * grid.h_theta
    r_lo = grid.edges[:-1]
    r_hi = grid.edges[1:]
    z = grid.radii

    total = np.zeros(grid.n_r, dtype=complex)

    def add_arc(radius, t0, t1):
        nonlocal total
        mid, scale = 0.5 * (t0 + t1), 0.5 * (t1 - t0)
        t = mid + scale * x
        u = radius[:, None] * np.exp(1j * t)[None, :]
        f = (np.conj(u) - z[:, None]) / (z[:, None] - u)
        du = 1j * u * scale
        total = total + (w * f * du).sum(axis=1)

    def add_radial(angle, s0, s1):
        nonlocal total
        mid, scale = 0.5 * (s0 + s1), 0.5 * (s1 - s0)
        s = mid[:, None] + scale[:, None] * x[None, :]
        u = s * np.exp(1j * angle)
        f = (np.conj(u) - z[:, None]) / (z[:, None] - u)
        du = np.exp(1j * angle) * scale[:, None]
        total = total + (w * f * du).sum(axis=1)

    add_arc(r_hi, -half, half)
    add_radial(half, r_hi, r_lo)
    add_arc(r_lo, half, -half)
    add_radial(-half, r_lo, r_hi)
    return total / 2j


def _subdivided_integrals(grid: DiskGrid, dk: int, d: int) -> np.ndarray:
    """Midpoint integral of dA(u)/(z - u) over the neighbor cell offset by
    dk rings and d angular steps, subdivided 4 x 4; z sits at the target
    node, rotated so it is real positive. Entries whose neighbor ring does
    not exist are zero."""
    n_r = grid.n_r
    idx = np.arange(n_r)
    kdx = idx + dk
    valid = (kdx >= 0) & (kdx < n_r)
    out = np.zeros(n_r, dtype=complex)
    if not np.any(valid):
        return out
    z = grid.radii[valid]
    r_lo = grid.edges[:-1][kdx[valid]]
    r_hi = grid.edges[1:][kdx[valid]]
    th_lo = d * grid.h_theta - 0.5 * grid.h_theta
    th_hi = d * grid.h_theta + 0.5 * grid.h_theta

    frac = np.arange(SUBDIV + 1) / SUBDIV
    redges = r_lo[:, None] ** (1.0 - frac[None, :]) * r_hi[:, None] ** frac[None, :]
    smid = np.sqrt(redges[:, 1:] * redges[:, :-1])
    area_r = 0.5 * (redges[:, 1:] ** 2 - redges[:, :-1] ** 2)
    tedges = np.linspace(th_lo, th_hi, SUBDIV + 1)
    tmid = 0.5 * (tedges[1:] + tedges[:-1])
    dth = (th_hi - th_lo) / SUBDIV

    u = smid[:, :, None] * np.exp(1j * tmid)[None, None, :]
    contrib = (area_r[:, :, None] * dth) / (z[:, None, None] - u)
    out[valid] = contrib.sum(axis=(1, 2))
    return out


def _cauchy_values(grid: DiskGrid, vals: np.ndarray) -> np.ndarray:
    """Core quadrature of (1/pi) integral g(u)/(z - u) dA at every node."""
    n_r, n_t = grid.shape
    ring_w = 0.5 * (grid.edges[1:] ** 2 - grid.edges[:-1] ** 2) * grid.h_theta
    eith = np.exp(1j * grid.angles)
    flip = (-np.arange(n_t)) % n_t

    gw = vals * ring_w[:, None, None, None]
    gw_hat = np.fft.fft(gw, axis=1)

    acc = np.empty_like(vals)
    for i in range(n_r):
        denom = grid.radii[i] - grid.radii[:, None] * eith[None, :]
        denom[i, 0] = 1.0
        kernel = 1.0 / denom
        kernel[i, 0] = 0.0
        k_hat = np.fft.fft(kernel[:, flip], axis=1)
        acc[i] = np.fft.ifft(
            (k_hat[:, :, None, None] * gw_hat).sum(axis=0), axis=0
        )

    self_exact = _self_cell_integrals(grid)
    for dk in (-1, 0, 1):
        shifted = np.arange(n_r) + dk
        valid = (shifted >= 0) & (shifted < n_r)
        for d in (-1, 0, 1):
            naive = np.zeros(n_r, dtype=complex)
            if dk == 0 and d == 0:
                exact = self_exact
            else:
                exact = _subdivided_integrals(grid, dk, d)
                kv = shifted[valid]
                naive[valid] = ring_w[kv] / (
                    grid.radii[valid] - grid.radii[kv] * np.exp(1j * d * grid.h_theta)
                )
            corr = np.where(valid, exact - naive, 0.0)
            src = np.roll(vals[shifted % n_r], -d, axis=1)
            acc += corr[:, None, None, None] * src

    acc *= np.exp(-1j * grid.angles)[None, :, None, None] / math.pi
    return acc


def cauchy_transform(g: GridField) -> GridField:
    """Discrete solid Cauchy transform: f with dbar f = g up to quadrature
    error and a holomorphic ambiguity across the annulus hole."""
    if g.kind not in ("dzbar", "function"):
        raise InputError("the transform applies to dzbar coefficient samples")
    return GridField(g.grid, "function", _cauchy_values(g.grid, g.values))


def twisted_solve(prob: DbarProblem) -> GridField:
    """Level-1 solver f = r^{-lambda} T0(r^{lambda} g), solving
    dbar f + (lambda/2) f/zbar = g."""
    if prob.level != 1:
        raise InputError("twisted_solve needs a level-1 problem")
    grid = prob.rhs.grid
    lam = complex(prob.twist)
    rpow = np.exp(lam * np.log(grid.radii))[:, None, None, None]
    inner = _cauchy_values(grid, prob.rhs.values * rpow)
    return GridField(grid, "function", inner / rpow)


def oscillatory_factor(z: np.ndarray, twist: complex, level: int) -> np.ndarray:
    """Unit-modulus factor exp(lambda/((k-1) zbar^{k-1}) - conj pair) used by
    the level >= 2 solver."""
    if level < 2:
        raise InputError("the oscillatory factor exists for level >= 2 only")
    k = level
    lam = complex(twist)
    zbar = np.conj(z)
    expo = lam / ((k - 1) * zbar ** (k - 1)) - np.conj(lam) / ((k - 1) * z ** (k - 1))
    return np.exp(expo)


def _phase_field(z: np.ndarray, twist: complex, level: int) -> np.ndarray:
    """Argument of the oscillatory factor as a real, unwrapped quantity."""
    k = level
    lam = complex(twist)
    return 2.0 * np.imag(lam / ((k - 1) * np.conj(z) ** (k - 1)))


def check_oscillation(grid: DiskGrid, twist: complex, level: int) -> None:
    """Raise unless the phase of the oscillatory factor moves by at most
    pi/4 between any cell center and its four corners."""
    center = _phase_field(grid.nodes(), twist, level)
    half = 0.5 * grid.h_theta
    worst = 0.0
    for redge in (grid.edges[:-1], grid.edges[1:]):
        for dth in (-half, half):
            corner_z = redge[:, None] * np.exp(1j * (grid.angles[None, :] + dth))
            corner = _phase_field(corner_z, twist, level)
            worst = max(worst, float(np.abs(corner - center).max()))
    if worst > PHASE_LIMIT:
        raise OscillationUnresolved(
            f"phase varies by {worst:.3f} > pi/4 across a cell; "
            "refine the grid or raise r_min"
        )


def irregular_solve(prob: DbarProblem) -> GridField:
    """Level k >= 2 solver f = phi T0(phi^{-1} g) with |phi| = 1, solving
    dbar f + (lambda/zbar^k) f = g."""
    if prob.level < 2:
        raise InputError("irregular_solve needs a level >= 2 problem")
    grid = prob.rhs.grid
    check_oscillation(grid, prob.twist, prob.level)
    z = grid.nodes()
    phi = oscillatory_factor(z, prob.twist, prob.level)
    if not np.allclose(np.abs(phi), 1.0, atol=1e-12):
        raise AssertionError("oscillatory factor drifted off the unit circle")
    phi = phi[:, :, None, None]
    inner = _cauchy_values(grid, prob.rhs.values / phi)
    return GridField(grid, "function", phi * inner)


def equation_residual(
    f: GridField, g: GridField, level: int, twist: complex
) -> np.ndarray:
    """Pointwise finite-difference residual of the level-k equation on the
    interior radial rings."""
    grid = f.grid
    vals = fd_dzbar(grid, f.values)
    z = grid.nodes()[1:-1, :, None, None]
    if level == 1:
        vals = vals + 0.5 * complex(twist) / np.conj(z) * f.values[1:-1]
    elif level >= 2:
        vals = vals + complex(twist) / np.conj(z) ** level * f.values[1:-1]
    return vals - g.values[1:-1]


# ---------------------------------------------------------------------------
# gauge fixing


@dataclass(frozen=True)
class GaugeFixResult:
    """Fixed point of u <- T(ua + a) together with convergence data.

    residual is the weighted sup of the defect of the last iterate's own
    equation (exactly |(u_prev - u) a| in the solver's sense); residual_fd
    re-evaluates the equation by finite differences on interior nodes and
    carries discretization error on top. homothety < 1 means the problem
    was shrunk to |z| <= homothety (and rescaled to the unit disk) before
    the contraction took hold; u then lives on the shrunk grid.
    """

    u: GridField
    residual: float
    homothety: float
    iterations: int
    trace: tuple
    residual_fd: float


@dataclass(frozen=True)
class _EntrySolver:
    row: int
    col: int
    level: int
    twist: complex


def _entry_table(data: PuncturePolarData, delta: float, scale: float = 1.0) -> list:
    levels = end_levels(data)
    mu = data.mu
    table = []
    for a in range(data.rank):
        for b in range(data.rank):
            k = int(levels.level[a, b])
            if k == 0:
                lam = 0.0 + 0.0j
                if _int_dist(delta) < RESONANCE_TOL:
                    raise ResonantWeight(f"delta = {delta} resonates for a level-0 entry")
            elif k == 1:
                lam = complex(mu[b].real - mu[a].real)
                if _int_dist(delta - lam.real) < RESONANCE_TOL:
                    raise ResonantWeight(
                        f"delta - Re(lambda) resonates for entry ({a}, {b})"
                    )
            else:
                ak = data.coeff(k).vector()
                lam = 0.5 * np.conj(ak[a] - ak[b])
                lam = complex(lam) * scale ** (1 - k)
            table.append(_EntrySolver(a, b, k, lam))
    return table


def _apply_entry_solvers(
    grid: DiskGrid, table: list, rhs: np.ndarray, phis: dict
) -> np.ndarray:
    """Solve the model equation entry by entry; each entry is a scalar
    problem for the dispatch decided by its level."""
    out = np.zeros_like(rhs)
    for ent in table:
        v = rhs[:, :, ent.row : ent.row + 1, ent.col : ent.col + 1]
        if ent.level == 0:
            f = _cauchy_values(grid, v)
        elif ent.level == 1:
            rpow = np.exp(ent.twist * np.log(grid.radii))[:, None, None, None]
            f = _cauchy_values(grid, v * rpow) / rpow
        else:
            phi = phis[(ent.row, ent.col)]
            f = phi * _cauchy_values(grid, v / phi)
        out[:, :, ent.row, ent.col] = f[:, :, 0, 0]
    return out


def _sup_weighted(grid: DiskGrid, vals: np.ndarray, expo: np.ndarray) -> float:
    rw = grid.radii[:, None, None, None] ** expo[None, None]
    return float((np.abs(vals) * rw).max())


def _a_exponents(levels: np.ndarray, delta: float) -> np.ndarray:
    return 2.0 - delta - np.maximum(levels, 1.0)


def _u_exponents(levels: np.ndarray, delta: float) -> np.ndarray:
    return -(np.maximum(levels, 1.0) - 1.0 + delta)


def perturbation_norm(a: GridField, data: PuncturePolarData, delta: float) -> float:
    """Weighted sup norm of a perturbation 1-form: level-k entries carry
    r^{2 - delta - k} (level 0 like level 1); both components count."""
    lvl = end_levels(data).level.astype(float)
    return _sup_weighted(a.grid, a.values, _a_exponents(lvl, delta))


def _prepare_phis(grid: DiskGrid, table: list) -> dict:
    phis = {}
    z = grid.nodes()
    for ent in table:
        if ent.level >= 2:
            check_oscillation(grid, ent.twist, ent.level)
            phi = oscillatory_factor(z, ent.twist, ent.level)
            phis[(ent.row, ent.col)] = phi[:, :, None, None]
    return phis


def gauge_fix(
    a: GridField,
    data: PuncturePolarData,
    delta: float = 0.5,
    p: float = 4.0,
    tol: float = 1e-8,
    max_iter: int = 50,
) -> GaugeFixResult:
    """Gauge a perturbed model dbar operator back to the model.

    Iterates u <- T(ua + a) where T inverts the model operator entry by
    entry (plain, log-twisted, or exponentially twisted by level). If the
    iteration fails to contract (difference ratio >= 0.9, or the budget runs
    out), the domain is shrunk by a homothety snapped to whole radial steps,
    which scales the perturbation norm by the homothety to the delta and the
    level-k twists by its (1-k) power, and the solve restarts on the shrunk
    grid.
    """
    if a.kind != "mixed":
        a = a.as_mixed()
    if a.rank != data.rank:
        raise InputError("perturbation rank does not match the puncture data")
    if p <= 2.0:
        raise InputError("exponent p must exceed 2")
    base = a.grid
    lvl = end_levels(data).level.astype(float)

    if a.max_abs() == 0.0:
        zero = GridField(base, "function", np.zeros(base.shape + (a.rank, a.rank), complex))
        return GaugeFixResult(zero, 0.0, 1.0, 0, (), 0.0)

    step_ratio = (base.r_max / base.r_min) ** (1.0 / (base.n_r - 1))
    rings_per_halving = max(1, round(math.log(2.0) / math.log(step_ratio)))

    shift = 0
    while True:
        n_r = base.n_r - shift
        if n_r < 8:
            raise NoContraction(
                "homothety ran out of radial resolution before contracting"
            )
        varpi = step_ratio ** (-shift)
        if shift == 0:
            grid = base
            avals = a.values
        else:
            grid = DiskGrid(base.r_min / varpi, base.r_max, n_r, base.n_theta)
            avals = varpi * a.values[:, :n_r]
        table = _entry_table(data, delta, varpi)
        phis = _prepare_phis(grid, table)
        aq = avals[1]
        a_expo = _a_exponents(lvl, delta)
        u_expo = _u_exponents(lvl, delta)

        lip = _lipschitz_probe(grid, table, phis, aq, u_expo, a.rank)
        if lip >= 0.9:
            shift += rings_per_halving
            continue

        u = np.zeros(grid.shape + (a.rank, a.rank), dtype=complex)
        d_prev = None
        trace = []
        for it in range(1, max_iter + 1):
            rhs = u @ aq + aq
            u_new = _apply_entry_solvers(grid, table, rhs, phis)
            res = _sup_weighted(grid, (u - u_new) @ aq, a_expo)
            trace.append(res)
            d = _sup_weighted(grid, u_new - u, u_expo)
            if d_prev is not None and d_prev > 0.0 and res > tol and d / d_prev >= 0.9:
                break
            u = u_new
            d_prev = d
            if res < tol:
                fd = _fd_residual(grid, table, u, aq, a_expo)
                return GaugeFixResult(
                    GridField(grid, "function", u),
                    res,
                    varpi,
                    it,
                    tuple(trace),
                    fd,
                )
        shift += rings_per_halving


def _lipschitz_probe(
    grid: DiskGrid,
    table: list,
    phis: dict,
    aq: np.ndarray,
    u_expo: np.ndarray,
    rank: int,
) -> float:
    """Estimate the contraction constant of u -> T(ua + a) by pushing one
    direction per matrix entry through its linear part. The orbit itself can
    sit inside a nilpotent subalgebra and converge even when the map is
    expanding, so the estimate must probe off-orbit directions; each probe
    carries the radial profile that saturates the gauge norm at every ring,
    so its image is not discounted by the weights."""
    worst = 0.0
    for c in range(rank):
        for d in range(rank):
            v = np.zeros(grid.shape + (rank, rank), dtype=complex)
            v[:, :, c, d] = grid.radii[:, None] ** (-u_expo[c, d])
            img = _apply_entry_solvers(grid, table, v @ aq, phis)
            worst = max(worst, _sup_weighted(grid, img, u_expo))
    return worst


def gauge_defect(
    result: GaugeFixResult,
    a: GridField,
    data: PuncturePolarData,
    delta: float = 0.5,
) -> float:
    """Re-apply the model inverse once to a returned gauge and measure how
    far the gauge moves, in the weighted sup norm for gauges. A true fixed
    point does not move; the defect bounds the distance to one."""
    if a.kind != "mixed":
        a = a.as_mixed()
    grid = result.u.grid
    varpi = result.homothety
    avals = a.values if varpi == 1.0 else varpi * a.values[:, : grid.n_r]
    table = _entry_table(data, delta, varpi)
    phis = _prepare_phis(grid, table)
    aq = avals[1]
    u = result.u.values
    u_new = _apply_entry_solvers(grid, table, u @ aq + aq, phis)
    lvl = end_levels(data).level.astype(float)
    return _sup_weighted(grid, u_new - u, _u_exponents(lvl, delta))


def _fd_residual(
    grid: DiskGrid, table: list, u: np.ndarray, aq: np.ndarray, a_expo: np.ndarray
) -> float:
    """Straight finite-difference defect of dbar_0 u - ua - a on interior
    rings, in the same weighted sup norm as the solver residual."""
    vals = fd_dzbar(grid, u)
    zbar = np.conj(grid.nodes())[1:-1]
    w = np.zeros(zbar.shape + u.shape[-2:], dtype=complex)
    for ent in table:
        if ent.level == 1:
            w[:, :, ent.row, ent.col] = 0.5 * ent.twist / zbar
        elif ent.level >= 2:
            w[:, :, ent.row, ent.col] = ent.twist / zbar**ent.level
    defect = vals + w * u[1:-1] - (u @ aq + aq)[1:-1]
    rw = grid.radii[1:-1, None, None, None] ** a_expo[None, None]
    return float((np.abs(defect) * rw).max())
