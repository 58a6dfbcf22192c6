"""Discrete pivotal and area measures, their scaling fits, quasi-
multiplicativity, and the d-dimensional energy sum.

Measures are weighted point sets: every atom of one measure carries the same
mass delta^2 / alpha_hat, with alpha_hat the arm-probability normalization
estimated at the same mesh.  Scaling exponents are read off the mass of balls
centered at the measure's own atoms (the anchored ball mass), whose slope is
2 minus the arm exponent: 3/4 for the pivotal measure, 91/48 for the area
measure at kappa'=6.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit
from scipy.spatial import cKDTree

from ..params import ParameterRangeError
from .arms import _DI, _DJ, arm_probability
from .lattice import AnnulusSpec, LatticeConfig, embed
from .arms import four_arm_sites

__all__ = ["SiteMeasure", "pivotal_measure", "area_measure", "ball_mass_scaling",
           "energy_estimate", "energy_estimate_direct", "quasi_mult_check",
           "QuasiMultResult"]


@dataclass
class SiteMeasure:
    """Uniform-mass atoms on lattice sites.

    atoms are axial (x, y) pairs; positions are their Euclidean embeddings
    scaled by delta (so they live in the unit-size domain).
    """

    kind: str
    atoms: np.ndarray
    delta: float
    alpha_hat: float

    def __post_init__(self):
        if self.alpha_hat <= 0:
            raise ParameterRangeError("normalization alpha_hat must be positive")

    @property
    def mass_per_atom(self) -> float:
        return self.delta ** 2 / self.alpha_hat

    @property
    def positions(self) -> np.ndarray:
        if self.atoms.size == 0:
            return np.empty((0, 2))
        ex, ey = embed(self.atoms[:, 0].astype(float), self.atoms[:, 1].astype(float))
        return self.delta * np.column_stack((ex, ey))

    def total(self) -> float:
        return self.atoms.shape[0] * self.mass_per_atom


def pivotal_measure(config: LatticeConfig, eps_radius: int, alpha4_hat: float) -> SiteMeasure:
    """mu^eps: atoms at the eps-pivotal sites, mass delta^2 / alpha4_hat."""
    atoms = four_arm_sites(config, eps_radius)
    return SiteMeasure("pivotal", atoms, config.delta, alpha4_hat)


@njit(cache=True)
def _reach_from_outer(colors, mask, r2, r_in, r_out, marks, stack):
    """Mark open sites connected to the outer boundary ring of A(r_in, r_out)
    inside r <= r_out; atoms are the marked sites with r < r_in."""
    side = colors.shape[0]
    marks[:] = 0
    top = 0
    ring_lo = (r_out - 1.5) * (r_out - 1.5)
    rmax2 = r_out * r_out
    for y in range(side):
        for x in range(side):
            if mask[y, x] and colors[y, x] == 1 and ring_lo <= r2[y, x] <= rmax2:
                marks[y, x] = 1
                stack[top, 0] = y
                stack[top, 1] = x
                top += 1
    while top > 0:
        top -= 1
        y = stack[top, 0]
        x = stack[top, 1]
        for k in range(6):
            ny = y + _DI[k]
            nx = x + _DJ[k]
            if ny < 0 or ny >= side or nx < 0 or nx >= side:
                continue
            if marks[ny, nx] or not mask[ny, nx] or colors[ny, nx] != 1:
                continue
            if r2[ny, nx] > rmax2:
                continue
            marks[ny, nx] = 1
            stack[top, 0] = ny
            stack[top, 1] = nx
            top += 1


def area_measure(config: LatticeConfig, annulus: AnnulusSpec, alpha1_hat: float) -> SiteMeasure:
    """lambda^A: atoms at inner-face sites connected to the outer boundary of
    the annulus, mass delta^2 / alpha1_hat."""
    o = config.origin
    side = config.colors.shape[0]
    if annulus.r_outer > o + 0.5 and config.shape == "disk":
        raise ParameterRangeError("annulus exceeds the lattice")
    iy, ix = np.meshgrid(np.arange(side), np.arange(side), indexing="ij")
    x = (ix - o).astype(float)
    y = (iy - o).astype(float)
    ex, ey = embed(x, y)
    r2 = ex * ex + ey * ey
    marks = np.zeros((side, side), dtype=np.uint8)
    stack = np.empty((side * side, 2), dtype=np.int64)
    _reach_from_outer(config.colors, config.mask, r2, float(annulus.r_inner),
                      float(annulus.r_outer), marks, stack)
    inner = (r2 < annulus.r_inner ** 2) & (marks == 1)
    yy, xx = np.nonzero(inner)
    atoms = np.column_stack((xx - o, yy - o))
    return SiteMeasure("area", atoms, config.delta, alpha1_hat)


def ball_mass_scaling(measures: list[SiteMeasure], radii_lattice: np.ndarray,
                      drop_smallest: bool = True,
                      anchor_within: float | None = None) -> tuple[float, np.ndarray]:
    """Fitted exponent of the anchored ball mass against radius.

    For each radius r the statistic is the mean over anchor atoms x (pooled
    over the given measures) of mu(B(x, r)); its log-log slope estimates the
    measure's ball-scaling dimension.  The smallest radius is dropped by
    default (strongest lattice effects).  anchor_within restricts anchors to
    atoms within that lattice distance of the origin, keeping every anchor's
    defining arm longer than the largest ball radius.
    """
    radii = np.asarray(radii_lattice, dtype=float)
    counts = np.zeros(radii.size)
    total_anchors = 0
    for m in measures:
        pos = m.positions / m.delta  # lattice units
        if pos.shape[0] < 2:
            continue
        if anchor_within is None:
            anchors = pos
        else:
            keep = np.einsum("ij,ij->i", pos, pos) <= anchor_within ** 2
            anchors = pos[keep]
            if anchors.shape[0] == 0:
                continue
        tree = cKDTree(pos)
        atree = cKDTree(anchors)
        counts += m.mass_per_atom * atree.count_neighbors(tree, radii)
        total_anchors += anchors.shape[0]
    if total_anchors == 0:
        raise ValueError("no atoms to fit")
    mean_mass = counts / total_anchors
    sel = slice(1, None) if drop_smallest else slice(None)
    slope = np.polyfit(np.log(radii[sel]), np.log(mean_mass[sel]), 1)[0]
    return float(slope), mean_mass


@njit(cache=True)
def _energy_pairs(px, py, mass, s_exp):
    total = 0.0
    n = px.shape[0]
    for i in range(n):
        for j in range(i + 1, n):
            dx = px[i] - px[j]
            dy = py[i] - py[j]
            total += (dx * dx + dy * dy) ** (-0.5 * s_exp)
    return 2.0 * mass * mass * total


def energy_estimate(m: SiteMeasure, d: float, eps_exp: float,
                    chunk: int = 2048) -> float:
    """sum_{x != y} m_x m_y |x-y|^-(d - eps_exp), chunk-accelerated."""
    s = d - eps_exp
    if s <= 0:
        raise ParameterRangeError("need d - eps_exp > 0")
    if not 0 < eps_exp < d:
        raise ParameterRangeError("need 0 < eps_exp < d")
    pos = m.positions
    n = pos.shape[0]
    if n < 2:
        raise ParameterRangeError("energy needs at least two atoms")
    mass = m.mass_per_atom
    total = 0.0
    for i0 in range(0, n, chunk):
        a = pos[i0:i0 + chunk]
        for j0 in range(i0, n, chunk):
            b = pos[j0:j0 + chunk]
            d2 = ((a[:, None, :] - b[None, :, :]) ** 2).sum(axis=2)
            if i0 == j0:
                iu = np.triu_indices(a.shape[0], k=1)
                vals = d2[iu]
                total += 2.0 * np.sum(vals ** (-0.5 * s))
            else:
                total += 2.0 * np.sum(d2 ** (-0.5 * s))
    return mass * mass * total


def energy_estimate_direct(m: SiteMeasure, d: float, eps_exp: float) -> float:
    """Plain pairwise double sum (oracle path; small atom counts only)."""
    s = d - eps_exp
    if s <= 0:
        raise ParameterRangeError("need d - eps_exp > 0")
    pos = m.positions
    return float(_energy_pairs(np.ascontiguousarray(pos[:, 0]),
                               np.ascontiguousarray(pos[:, 1]),
                               m.mass_per_atom, s))


@dataclass
class QuasiMultResult:
    p_13: float
    p_12: float
    p_23: float
    se_13: float
    se_prod: float
    upper_bound_holds: bool
    lower_ratio: float


def quasi_mult_check(r1: float, r2: float, r3: float, trials: int,
                     seed: int = 0) -> QuasiMultResult:
    """One-arm quasi-multiplicativity: alpha(r1,r3) <= alpha(r1,r2) alpha(r2,r3)
    within 3 sigma (independence of disjoint annuli), and the lower-bound
    ratio alpha(r1,r3) / (alpha(r1,r2) alpha(r2,r3)) reported.

    Degenerate middle radius (r2 == r1) gives alpha(r1,r2) = 1 exactly.
    """
    if not r1 <= r2 <= r3 or r1 >= r3:
        raise ParameterRangeError("need r1 <= r2 <= r3 with r1 < r3")

    def estimate(a, b, stream):
        if b <= a + 1e-9:
            return 1.0, 0.0
        est = arm_probability(AnnulusSpec(a, b), trials, seed=seed + stream)
        return est.p_hat, est.stderr

    p12, se12 = estimate(r1, r2, 1)
    p23, se23 = estimate(r2, r3, 2)
    p13, se13 = estimate(r1, r3, 3)
    prod = p12 * p23
    se_prod = math.sqrt((se12 * p23) ** 2 + (se23 * p12) ** 2)
    holds = p13 <= prod + 3.0 * math.sqrt(se13 ** 2 + se_prod ** 2)
    ratio = p13 / prod if prod > 0 else math.inf
    return QuasiMultResult(p13, p12, p23, se13, se_prod, bool(holds), ratio)
