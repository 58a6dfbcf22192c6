"""Discrete zero-boundary GFF, circle averages, bulk/boundary multiplicative
chaos measures, Girsanov tilting, the dyadic coordinate-change check, and
quantum-wedge radial profiles.

Conventions: the field lives on an n x n grid over the unit square with zero
boundary values; covariance is 2*pi times the inverse of the 5-point graph
Laplacian, so circle-average variances grow like log(1/eps) with slope 1.
Mollification is the m-point bilinear ring average; per-cell variance maps
are estimated from independent field samples with the same ring operator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.fft import dstn
from scipy.signal import fftconvolve

from .levy import sample_subordinator
from .params import ParameterRangeError, SleParams
from .rng import rng_for

__all__ = [
    "GridField",
    "CellMeasure",
    "BoundaryMeasure",
    "WedgeProfile",
    "DiskExitsDomainError",
    "ConditioningFailedError",
    "sample_gff",
    "green_apply",
    "circle_average",
    "ring_weights",
    "averaged_field",
    "mollified_variance",
    "variance_map",
    "gmc_measure",
    "boundary_measure",
    "girsanov_check",
    "coordinate_change_check",
    "wedge_radial",
    "thin_wedge_bead_lengths",
]


class DiskExitsDomainError(ValueError):
    """The averaging disk does not fit inside the domain."""


class ConditioningFailedError(RuntimeError):
    """Rejection sampling of the conditioned wedge branch did not succeed."""


@dataclass
class GridField:
    """Zero-boundary Gaussian field sample on an n x n grid over [0,1]^2."""

    n: int
    values: np.ndarray
    seed: int

    @property
    def spacing(self) -> float:
        return 1.0 / (self.n - 1)


def _eigenvalues(m: int) -> np.ndarray:
    j = np.arange(1, m + 1)
    lam1 = 2.0 - 2.0 * np.cos(j * np.pi / (m + 1))
    return lam1[:, None] + lam1[None, :]


def sample_gff(n: int, seed: int = 0) -> GridField:
    """Spectral sample in the discrete sine basis; Cov = 2*pi*L^{-1}."""
    if n < 8:
        raise ParameterRangeError(f"grid side n={n} too small (need >= 8)")
    m = n - 2
    lam = _eigenvalues(m)
    xi = rng_for(seed, 13).standard_normal((m, m))
    interior = dstn(xi * np.sqrt(2.0 * np.pi / lam), type=1, norm="ortho")
    values = np.zeros((n, n))
    values[1:-1, 1:-1] = interior
    return GridField(n, values, seed)


def green_apply(n: int, rhs: np.ndarray) -> np.ndarray:
    """Apply the covariance operator 2*pi*L^{-1} to a full-grid array.

    rhs and the result are (n, n) with zero boundary rows/columns.
    """
    m = n - 2
    lam = _eigenvalues(m)
    inner = dstn(dstn(rhs[1:-1, 1:-1], type=1, norm="ortho") * (2.0 * np.pi / lam),
                 type=1, norm="ortho")
    out = np.zeros((n, n))
    out[1:-1, 1:-1] = inner
    return out


def _angle_count(eps_pixels: float, base: int = 64) -> int:
    return base * max(1, int(round(eps_pixels)))


def ring_weights(n: int, z: tuple[float, float], eps: float,
                 half: bool = False) -> np.ndarray:
    """Bilinear-interpolation weights of the (semi)circle average around z.

    z is in domain coordinates; eps is the Euclidean radius.  Returns an
    (n, n) weight array summing to 1.  half=True keeps angles in (0, pi)
    (the upper semicircle used for boundary averages).
    """
    a = 1.0 / (n - 1)
    r = eps / a
    cx, cy = z[0] / a, z[1] / a
    m_ang = _angle_count(r)
    th = (np.arange(m_ang) + 0.5) * ((math.pi if half else 2.0 * math.pi) / m_ang)
    px = cx + r * np.cos(th)
    py = cy + r * np.sin(th)
    if px.min() < 0 or py.min() < 0 or px.max() > n - 1 or py.max() > n - 1:
        raise DiskExitsDomainError(f"radius {eps} disk at {z} exits the unit square")
    w = np.zeros((n, n))
    ix, iy = np.floor(px).astype(int), np.floor(py).astype(int)
    fx, fy = px - ix, py - iy
    unit = 1.0 / m_ang
    np.add.at(w, (iy, ix), (1 - fx) * (1 - fy) * unit)
    np.add.at(w, (iy, np.minimum(ix + 1, n - 1)), fx * (1 - fy) * unit)
    np.add.at(w, (np.minimum(iy + 1, n - 1), ix), (1 - fx) * fy * unit)
    np.add.at(w, (np.minimum(iy + 1, n - 1), np.minimum(ix + 1, n - 1)), fx * fy * unit)
    return w


def circle_average(f: GridField, z: tuple[float, float], eps: float) -> float:
    """Mean of the bilinearly interpolated field over the circle of radius eps."""
    w = ring_weights(f.n, z, eps)
    return float(np.sum(w * f.values))


def mollified_variance(n: int, z: tuple[float, float], eps: float,
                       half: bool = False) -> float:
    """Exact Var of the (semi)circle average at z from the discrete Green
    operator: theta^T (2 pi L^{-1}) theta."""
    w = ring_weights(n, z, eps, half=half)
    return float(np.sum(w * green_apply(n, w)))


def _ring_kernel(eps_pixels: float) -> np.ndarray:
    m_ang = _angle_count(eps_pixels)
    th = (np.arange(m_ang) + 0.5) * (2.0 * math.pi / m_ang)
    r = eps_pixels
    half = int(math.ceil(r)) + 1
    k = np.zeros((2 * half + 1, 2 * half + 1))
    px = half + r * np.cos(th)
    py = half + r * np.sin(th)
    ix, iy = np.floor(px).astype(int), np.floor(py).astype(int)
    fx, fy = px - ix, py - iy
    unit = 1.0 / m_ang
    np.add.at(k, (iy, ix), (1 - fx) * (1 - fy) * unit)
    np.add.at(k, (iy, ix + 1), fx * (1 - fy) * unit)
    np.add.at(k, (iy + 1, ix), (1 - fx) * fy * unit)
    np.add.at(k, (iy + 1, ix + 1), fx * fy * unit)
    return k


def averaged_field(values: np.ndarray, n: int, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Circle-averaged field for every cell, plus the validity mask (cells
    whose averaging disk stays inside the domain)."""
    a = 1.0 / (n - 1)
    r = eps / a
    k = _ring_kernel(r)
    avg = fftconvolve(values, k, mode="same")
    margin = int(math.ceil(r)) + 1
    valid = np.zeros((n, n), dtype=bool)
    if 2 * margin < n:
        valid[margin:n - margin, margin:n - margin] = True
    return avg, valid


_VARMAP_CACHE: dict = {}


def variance_map(n: int, eps: float, m_samples: int = 2048, seed: int = 77_001) -> np.ndarray:
    """Per-cell Var of the circle average, estimated over m_samples fields
    with the same ring operator as the measure.  Cached per (n, eps)."""
    key = (n, round(eps, 12), m_samples)
    if key in _VARMAP_CACHE:
        return _VARMAP_CACHE[key]
    acc = np.zeros((n, n))
    for s in range(m_samples):
        f = sample_gff(n, seed=seed + s)
        avg, _ = averaged_field(f.values, n, eps)
        acc += avg * avg
    out = acc / m_samples
    _VARMAP_CACHE[key] = out
    return out


@dataclass
class CellMeasure:
    """Nonnegative mass per grid cell; cells with invalid averaging disks
    carry zero mass and are excluded from valid_mask."""

    n: int
    gamma: float
    eps: float
    masses: np.ndarray
    valid: np.ndarray
    normalization: str

    def total(self) -> float:
        return float(self.masses.sum())

    def box_mass(self, x0: float, x1: float, y0: float, y1: float) -> float:
        a = 1.0 / (self.n - 1)
        i0, i1 = int(round(y0 / a)), int(round(y1 / a))
        j0, j1 = int(round(x0 / a)), int(round(x1 / a))
        return float(self.masses[i0:i1, j0:j1].sum())


def _check_gamma(gamma: float) -> float:
    gamma = float(gamma)
    if not 0.0 <= gamma < 2.0:
        raise ParameterRangeError(f"gamma={gamma!r} outside [0, 2)")
    return gamma


def gmc_measure(f: GridField, gamma: float, eps: float,
                normalization: str = "variance", shift: float = 0.0) -> CellMeasure:
    """Per-cell chaos masses of the field (optionally shifted by a constant).

    normalization="variance": exp(gamma h_eps - gamma^2/2 Var h_eps) * area,
    so E[mass] is the cell area.  normalization="epsilon": the scaling form
    eps^(gamma^2/2) exp(gamma h_eps) * area used by the coordinate-change
    check.  gamma=0 returns exactly the area measure on valid cells.
    """
    gamma = _check_gamma(gamma)
    if normalization not in ("variance", "epsilon"):
        raise ValueError(f"unknown normalization {normalization!r}")
    n = f.n
    area = f.spacing ** 2
    avg, valid = averaged_field(f.values, n, eps)
    if gamma == 0.0:
        masses = np.where(valid, area, 0.0)
        return CellMeasure(n, gamma, eps, masses, valid, normalization)
    if normalization == "variance":
        log_norm = -0.5 * gamma * gamma * variance_map(n, eps)
    else:
        log_norm = 0.5 * gamma * gamma * math.log(eps)
    masses = np.where(valid, area * np.exp(gamma * (avg + shift) + log_norm), 0.0)
    return CellMeasure(n, gamma, eps, masses, valid, normalization)


@dataclass
class BoundaryMeasure:
    """Mass per boundary cell along the grid midline (the free-boundary strip)."""

    n: int
    gamma: float
    eps: float
    positions: np.ndarray
    masses: np.ndarray
    valid: np.ndarray


_BVAR_CACHE: dict = {}
_BRING_CACHE: dict = {}


def _boundary_ring_operator(n: int, eps: float, row: int, cols: np.ndarray):
    """Sparse (len(cols), n*n) matrix of upper-semicircle averaging weights."""
    from scipy.sparse import csr_matrix, vstack

    key = (n, round(eps, 12), row, cols[0], cols[-1])
    if key in _BRING_CACHE:
        return _BRING_CACHE[key]
    a = 1.0 / (n - 1)
    rows = []
    for c in cols:
        w = ring_weights(n, (c * a, row * a), eps, half=True)
        rows.append(csr_matrix(w.reshape(1, -1)))
    op = vstack(rows).tocsr()
    _BRING_CACHE[key] = op
    return op


def _boundary_variance(n: int, eps: float, row: int, cols: np.ndarray,
                       m_samples: int = 1024, seed: int = 88_001) -> np.ndarray:
    key = (n, round(eps, 12), row, m_samples)
    if key in _BVAR_CACHE:
        return _BVAR_CACHE[key]
    op = _boundary_ring_operator(n, eps, row, cols)
    acc = np.zeros(len(cols))
    for s in range(m_samples):
        f = sample_gff(n, seed=seed + s)
        acc += (op @ f.values.ravel()) ** 2
    out = acc / m_samples
    _BVAR_CACHE[key] = out
    return out


def boundary_measure(f: GridField, gamma: float, eps: float) -> BoundaryMeasure:
    """Chaos length measure along the grid midline from semicircle averages.

    Masses are exp(gamma/2 h_eps - gamma^2/8 Var h_eps) * spacing, the
    variance-normalized form of the boundary regularization (exponent
    gamma/2, normalization eps^(gamma^2/4) in the scaling form); gamma=0
    gives boundary Lebesgue exactly.
    """
    gamma = _check_gamma(gamma)
    n = f.n
    a = f.spacing
    row = n // 2
    margin = int(math.ceil(eps / a)) + 2
    cols = np.arange(margin, n - margin)
    if cols.size == 0:
        raise DiskExitsDomainError("eps too large for the boundary strip")
    positions = cols * a
    if gamma == 0.0:
        masses = np.full(cols.size, a)
        return BoundaryMeasure(n, gamma, eps, positions, masses, np.ones(cols.size, bool))
    avgs = _boundary_ring_operator(n, eps, row, cols) @ f.values.ravel()
    var = _boundary_variance(n, eps, row, cols)
    masses = a * np.exp(0.5 * gamma * avgs - 0.125 * gamma * gamma * var)
    return BoundaryMeasure(n, gamma, eps, positions, masses, np.ones(cols.size, bool))


@dataclass
class GirsanovResult:
    tilted_estimate: float
    shifted_estimate: float
    stderr: float
    zscore: float


def girsanov_check(n: int, gamma: float, z: tuple[float, float], statistic,
                   n_trials: int, eps: float, seed: int = 0,
                   n_batches: int = 20) -> GirsanovResult:
    """Two routes to E[f(h + gamma K_eps(., z))]: reweighting by the
    normalized tilt exp(gamma h_eps(z)), and direct shifting by the Green
    kernel.  Returns both estimates and the paired z-score.
    """
    gamma = _check_gamma(gamma)
    theta = ring_weights(n, z, eps)
    kernel = green_apply(n, theta)
    w = np.empty(n_trials)
    f_plain = np.empty(n_trials)
    f_shift = np.empty(n_trials)
    for t in range(n_trials):
        f = sample_gff(n, seed=seed + t)
        w[t] = math.exp(gamma * float(np.sum(theta * f.values)))
        f_plain[t] = statistic(f.values)
        f_shift[t] = statistic(f.values + gamma * kernel)
    tilted = float(np.sum(w * f_plain) / np.sum(w))
    shifted = float(np.mean(f_shift))
    # paired batch means for the difference
    bt = np.array_split(np.arange(n_trials), n_batches)
    diffs = np.array([np.sum(w[b] * f_plain[b]) / np.sum(w[b]) - np.mean(f_shift[b])
                      for b in bt])
    se = float(np.std(diffs, ddof=1) / math.sqrt(len(diffs)))
    zscore = (tilted - shifted) / se if se > 0 else 0.0
    return GirsanovResult(tilted, shifted, se, float(zscore))


@dataclass
class CoordinateChangeResult:
    mass_domain: float
    mass_scaled: float
    discrepancy: float


def coordinate_change_check(n: int, r: float, gamma: float, eps: float,
                            n_seeds: int = 200, seed: int = 0,
                            box=(0.125, 0.375)) -> CoordinateChangeResult:
    """Mean chaos mass of a test square under the dyadic scaling z -> r z.

    Compares E[nu_h(box / r ... )] on the unit-square grid against the mass
    computed on the scaled domain [0, r]^2 with the field corrected by
    +Q log|(phi^{-1})'|; the scaling form of the measure (eps^(gamma^2/2))
    and mollification radius r*eps make the two agree up to lattice effects.
    dyadic r only (grids must nest).
    """
    gamma = _check_gamma(gamma)
    if r not in (1.0, 0.5, 2.0):
        raise ParameterRangeError("coordinate change supports r in {1/2, 1, 2}")
    if r == 2.0:
        # z -> 2z on [0, 1/2]^2 is the inverse of the r=1/2 check; run that
        # with the roles swapped
        res = coordinate_change_check(n, 0.5, gamma, eps, n_seeds, seed, box)
        return CoordinateChangeResult(res.mass_scaled, res.mass_domain, res.discrepancy)
    lo, hi = box
    area = 1.0 / (n - 1) ** 2
    # gamma*Q written as gamma^2/2 + 2, finite for all gamma in [0, 2)
    gq = 0.5 * gamma * gamma + 2.0
    tot_a = 0.0
    tot_b = 0.0
    for s in range(n_seeds):
        fa = sample_gff(n, seed=seed + 2 * s)
        ma = gmc_measure(fa, gamma, eps, normalization="epsilon")
        tot_a += ma.box_mass(lo / r, hi / r, lo / r, hi / r)
        if r == 1.0:
            tot_b = tot_a
            continue
        # the scaled domain [0, r]^2 carries the same n x n zero-boundary
        # field law with spacing r*a; the mollification radius r*eps is the
        # same number of pixels, so averaged_field is called with eps (its
        # radius argument is relative to the unit-square spacing), while the
        # scaling normalization uses the true Euclidean radius r*eps.  The
        # field is corrected by +Q log|(phi^{-1})'| = Q log(1/r).
        fb = sample_gff(n, seed=seed + 2 * s + 1)
        avg, valid = averaged_field(fb.values, n, eps)
        log_norm = 0.5 * gamma * gamma * math.log(r * eps)
        shift_factor = math.exp(gq * math.log(1.0 / r))
        masses = np.where(valid, (r * r * area) * shift_factor *
                          np.exp(gamma * avg + log_norm), 0.0)
        # box is in scaled-domain coordinates; cell index = coord / (r*a)
        a_f = r / (n - 1)
        i0, i1 = int(round(lo / a_f)), int(round(hi / a_f))
        tot_b += float(masses[i0:i1, i0:i1].sum())
    mass_a = tot_a / n_seeds
    mass_b = tot_b / n_seeds
    disc = abs(mass_a - mass_b) / (0.5 * (mass_a + mass_b)) if mass_a + mass_b > 0 else 0.0
    return CoordinateChangeResult(mass_a, mass_b, disc)


@dataclass
class WedgeProfile:
    """Radial profile A_s of an alpha-thick wedge on both branches.

    s_grid is symmetric around 0; the s<0 branch uses the Brownian motion
    conditioned to keep hat(B)_{2t} + (Q - alpha) t positive up to the desk
    horizon (resampled until true).  attempts records the rejection count.
    """

    alpha: float
    s_grid: np.ndarray
    a_values: np.ndarray
    attempts: int


def wedge_radial(alpha: float, p: SleParams, horizon: float, seed: int = 0,
                 ds: float = 0.01, max_attempts: int = 10_000) -> WedgeProfile:
    """Sample A_s = B_{2s} + alpha s (s>0) / hat(B)_{-2s} + alpha s (s<0)."""
    alpha = float(alpha)
    if alpha >= p.q_coeff:
        raise ParameterRangeError(
            f"alpha={alpha} >= Q={p.q_coeff:.6g}: thin regime; use thin_wedge_bead_lengths")
    rng = rng_for(seed, 41)
    m = int(round(horizon / ds))
    inc_sd = math.sqrt(2.0 * ds)
    b_pos = np.concatenate(([0.0], np.cumsum(inc_sd * rng.standard_normal(m))))
    t = ds * np.arange(m + 1)
    attempts = 0
    while True:
        attempts += 1
        if attempts > max_attempts:
            raise ConditioningFailedError(
                f"no path satisfied the positivity conditioning in {max_attempts} tries")
        b_hat = np.concatenate(([0.0], np.cumsum(inc_sd * rng.standard_normal(m))))
        if np.all((b_hat + (p.q_coeff - alpha) * t)[1:] > 0.0):
            break
    s_neg = -t[::-1]
    a_neg = b_hat[::-1] + alpha * s_neg
    s_pos = t[1:]
    a_pos = b_pos[1:] + alpha * s_pos
    return WedgeProfile(alpha, np.concatenate((s_neg, s_pos)),
                        np.concatenate((a_neg, a_pos)), attempts)


def thin_wedge_bead_lengths(alpha: float, p: SleParams, local_time: float = 1.0,
                            seed: int = 0, cutoff: float = 1e-6) -> np.ndarray:
    """Bead (excursion) boundary lengths of an alpha-thin wedge.

    For alpha in (Q, Q + gamma/2) the radial profile is built from the
    excursions of a Bessel process of dimension 1 + 2(Q - alpha)/gamma; the
    bead lengths are the jumps of the inverse local time, a stable
    subordinator of index 1 - dim/2 = 1/2 + (alpha - Q)/gamma.
    """
    alpha = float(alpha)
    q, g = p.q_coeff, p.gamma
    if not q < alpha < q + g / 2.0:
        raise ParameterRangeError(f"alpha={alpha} outside the thin-wedge range "
                                  f"({q:.6g}, {q + g / 2.0:.6g})")
    index = 0.5 + (alpha - q) / g
    path = sample_subordinator(index, 1.0, local_time, cutoff=cutoff, seed=seed,
                               compensate=False)
    return np.sort(path.jump_sizes)[::-1]
