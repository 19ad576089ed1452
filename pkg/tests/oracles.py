"""Reference implementations used to cross-check the package.

Everything here is deliberately independent of wildhodge internals: dict-based
series arithmetic, brute-force enumeration, explicit index loops, closed-form
integrals. Slow by design; tests keep the sizes small.
"""

from __future__ import annotations

import itertools
import math

import numpy as np


# ---------------------------------------------------------------------------
# formal Laurent series as {order: matrix} dicts


def series_mul(a: dict, b: dict, nmax: int) -> dict:
    out: dict = {}
    for ja, ca in a.items():
        for jb, cb in b.items():
            j = ja + jb
            if j > nmax:
                continue
            prev = out.get(j)
            out[j] = ca @ cb if prev is None else prev + ca @ cb
    return out


def series_exp(u: dict, nmax: int, rank: int) -> dict:
    """exp of a series with positive valuation, truncated at nmax."""
    eye = np.eye(rank, dtype=complex)
    acc = {0: eye.copy()}
    term = {0: eye.copy()}
    if not u:
        return acc
    vmin = min(u)
    if vmin < 1:
        raise ValueError("series_exp needs positive valuation")
    for k in range(1, nmax // vmin + 1):
        term = series_mul(term, u, nmax)
        term = {j: c / k for j, c in term.items()}
        for j, c in term.items():
            prev = acc.get(j)
            acc[j] = c.copy() if prev is None else prev + c
    return acc


def series_dz(a: dict) -> dict:
    return {j - 1: j * c for j, c in a.items() if j != 0}


def gauge_action_oracle(u: dict, conn: dict, nmax: int, rank: int) -> dict:
    """Transform of the form A dz under g = exp(u): g A g^{-1} - (dg) g^{-1}."""
    g = series_exp(u, nmax, rank)
    ginv = series_exp({j: -c for j, c in u.items()}, nmax, rank)
    out = series_mul(series_mul(g, conn, nmax), ginv, nmax)
    for j, c in series_mul(series_dz(g), ginv, nmax).items():
        prev = out.get(j)
        out[j] = -c if prev is None else prev - c
    return out


def series_coeff(a: dict, j: int, rank: int) -> np.ndarray:
    c = a.get(j)
    return np.zeros((rank, rank), dtype=complex) if c is None else c


# ---------------------------------------------------------------------------
# stability enumeration


def int_dist(s: complex) -> float:
    return abs(s.imag) + abs(s.real - round(s.real))


def subsum_enumerate(residues: list, tol: float) -> list:
    """All size-k subset choices (same k at every puncture) whose residue
    subsum lies within tol of an integer. Brute force."""
    r = len(residues[0])
    hits = []
    for k in range(1, r):
        per = list(itertools.combinations(range(r), k))
        for choice in itertools.product(per, repeat=len(residues)):
            s = sum(
                complex(residues[p][j]) for p, sub in enumerate(choice) for j in sub
            )
            d = int_dist(s)
            if d <= tol:
                hits.append((choice, s, d))
    return hits


# ---------------------------------------------------------------------------
# orbit problems


def rank2_offdiag_product(lam: np.ndarray, sigma: np.ndarray) -> complex:
    """For B = [[l1, b], [c, l2]] with spectrum sigma: bc = l1 l2 - s1 s2."""
    return lam[0] * lam[1] - sigma[0] * sigma[1]


def perm_match_dist(eigs: np.ndarray, sigma: np.ndarray) -> float:
    """Best max-abs eigenvalue matching over all permutations (small r only)."""
    best = math.inf
    for perm in itertools.permutations(range(len(sigma))):
        d = max(abs(eigs[list(perm)] - sigma))
        best = min(best, d)
    return best


def char_poly_coeffs(mat: np.ndarray) -> np.ndarray:
    """Coefficients of det(xI - M), highest power first, via numpy.poly."""
    return np.poly(mat)


# ---------------------------------------------------------------------------
# weighted norms: closed forms for radial power laws


def lp_delta_power_norm(
    x: float, delta: float, p: float, rmin: float, rmax: float
) -> float:
    """L^p_delta norm of f = r^x on the annulus rmin..rmax.

    ||f||^p = int (r^{x-delta-2/p})^p r dr dtheta = 2 pi [r^{p(x-delta)} / (p(x-delta))].
    """
    e = p * (x - delta)
    if e == 0:
        val = 2.0 * math.pi * math.log(rmax / rmin)
    else:
        val = 2.0 * math.pi * (rmax**e - rmin**e) / e
    return val ** (1.0 / p)


# ---------------------------------------------------------------------------
# finite differences on a geometric polar grid, explicit loops


def fd_dzbar_loops(radii: np.ndarray, angles: np.ndarray, f: np.ndarray) -> np.ndarray:
    """d/dzbar = e^{i theta}/(2r) (d/dt + i d/dtheta), t = log r, centered.

    f has shape (n_r, n_theta, ...); returns shape (n_r - 2, n_theta, ...)
    for the interior radial nodes.
    """
    nr, nt = f.shape[0], f.shape[1]
    ht = math.log(radii[1] / radii[0])
    hth = angles[1] - angles[0]
    out = np.zeros((nr - 2, nt) + f.shape[2:], dtype=complex)
    for i in range(1, nr - 1):
        for j in range(nt):
            dt = (f[i + 1, j] - f[i - 1, j]) / (2.0 * ht)
            dth = (f[i, (j + 1) % nt] - f[i, (j - 1) % nt]) / (2.0 * hth)
            z_phase = np.exp(1j * angles[j])
            out[i - 1, j] = z_phase / (2.0 * radii[i]) * (dt + 1j * dth)
    return out


def fd_dz_loops(radii: np.ndarray, angles: np.ndarray, f: np.ndarray) -> np.ndarray:
    """d/dz = e^{-i theta}/(2r) (d/dt - i d/dtheta), t = log r, centered."""
    nr, nt = f.shape[0], f.shape[1]
    ht = math.log(radii[1] / radii[0])
    hth = angles[1] - angles[0]
    out = np.zeros((nr - 2, nt) + f.shape[2:], dtype=complex)
    for i in range(1, nr - 1):
        for j in range(nt):
            dt = (f[i + 1, j] - f[i - 1, j]) / (2.0 * ht)
            dth = (f[i, (j + 1) % nt] - f[i, (j - 1) % nt]) / (2.0 * hth)
            z_phase = np.exp(-1j * angles[j])
            out[i - 1, j] = z_phase / (2.0 * radii[i]) * (dt - 1j * dth)
    return out


# ---------------------------------------------------------------------------
# direct Cauchy quadrature (loops; filled in alongside the dbar tests)


def gl_nodes(n: int) -> tuple:
    return np.polynomial.legendre.leggauss(n)


def cell_boundary_integral(z: complex, r_lo: float, r_hi: float, th_lo: float, th_hi: float, npts: int = 16) -> complex:
    """int over the cell of dA(u)/(z-u) via Stokes: (1/2i) oint (ubar - zbar)/(z-u) du.

    Boundary = two arcs (outer counterclockwise, inner clockwise) and two
    radial segments, oriented so the cell stays on the left.
    """
    x, w = gl_nodes(npts)

    def arc(r: float, t0: float, t1: float) -> complex:
        th = 0.5 * (t1 + t0) + 0.5 * (t1 - t0) * x
        u = r * np.exp(1j * th)
        du = 1j * u * 0.5 * (t1 - t0)
        return np.sum((np.conj(u) - np.conj(z)) / (z - u) * du * w)

    def seg(t: float, r0: float, r1: float) -> complex:
        rr = 0.5 * (r1 + r0) + 0.5 * (r1 - r0) * x
        u = rr * np.exp(1j * t)
        du = np.exp(1j * t) * 0.5 * (r1 - r0)
        return np.sum((np.conj(u) - np.conj(z)) / (z - u) * du * w)

    total = arc(r_hi, th_lo, th_hi) + seg(th_hi, r_hi, r_lo)
    total += arc(r_lo, th_hi, th_lo) + seg(th_lo, r_lo, r_hi)
    return total / 2j


def subdivided_cell_sum(z: complex, r_lo: float, r_hi: float, th_lo: float, th_hi: float, m: int = 4) -> complex:
    """int dA(u)/(z-u) over the cell by m x m midpoint subcells.

    Radial split is geometric, angular split uniform, matching the cell
    geometry of the production grid.
    """
    total = 0.0 + 0.0j
    redges = np.geomspace(r_lo, r_hi, m + 1)
    tedges = np.linspace(th_lo, th_hi, m + 1)
    for a in range(m):
        rm = math.sqrt(redges[a] * redges[a + 1])
        area_r = 0.5 * (redges[a + 1] ** 2 - redges[a] ** 2)
        for b in range(m):
            tm = 0.5 * (tedges[b] + tedges[b + 1])
            u = rm * np.exp(1j * tm)
            total += area_r * (tedges[b + 1] - tedges[b]) / (z - u)
    return total


def cauchy_direct(radii: np.ndarray, angles: np.ndarray, edges: np.ndarray, vals: np.ndarray) -> np.ndarray:
    """(1/pi) int g(u)/(z-u) dA by plain loops over every node pair.

    Far cells use node value times exact cell area, the self cell the exact
    boundary integral, and the eight surrounding cells 4 x 4 midpoint
    subdivision. Mirrors the production quadrature rule without FFTs or
    rotation tricks; O(n^2) in the node count.
    """
    n_r, n_t = vals.shape
    h_th = angles[1] - angles[0]
    area = 0.5 * (edges[1:] ** 2 - edges[:-1] ** 2) * h_th
    out = np.zeros((n_r, n_t), dtype=complex)
    for i in range(n_r):
        for j in range(n_t):
            z = radii[i] * np.exp(1j * angles[j])
            total = 0.0 + 0.0j
            for k in range(n_r):
                for l in range(n_t):
                    u = radii[k] * np.exp(1j * angles[l])
                    th_lo = angles[l] - 0.5 * h_th
                    th_hi = angles[l] + 0.5 * h_th
                    dl = (l - j) % n_t
                    near_angle = dl in (0, 1, n_t - 1)
                    if k == i and l == j:
                        w = cell_boundary_integral(z, edges[k], edges[k + 1], th_lo, th_hi)
                    elif abs(k - i) <= 1 and near_angle:
                        w = subdivided_cell_sum(z, edges[k], edges[k + 1], th_lo, th_hi)
                    else:
                        w = area[k] / (z - u)
                    total += w * vals[k, l]
            out[i, j] = total / math.pi
    return out
