"""SLE(kappa, rho) driving processes, zipper curve tracing, boundary touching.

The driving pair (W, V) is stepped by Euler-Maruyama with a reflect-and-absorb
collision rule: the singular drift terms are evaluated with the gap magnitude
floored at a dt-scale threshold, and after each step force points are clamped
back to their side of W (an absorbed pair moves together until the noise
separates it).  Curve tracing composes the inverse vertical-slit maps of the
piecewise-constant driving in reverse order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .params import ParameterRangeError, SleParams
from .rng import rng_for

__all__ = [
    "ForceSpec",
    "DrivingPath",
    "CurveTrace",
    "StepSizeError",
    "TraceBlowupError",
    "simulate_driving",
    "trace_curve",
    "trace_at_indices",
    "boundary_hits",
    "halfplane_capacity",
    "segment_self_intersections",
]


class StepSizeError(RuntimeError):
    """The drift would overshoot a force point by more than its gap: dt too large."""


class TraceBlowupError(RuntimeError):
    """Numeric blow-up near the tip while composing slit maps."""


@dataclass(frozen=True)
class ForceSpec:
    """One boundary force point: side 'left'/'right', position (<=0 / >=0), weight > -2."""

    side: str
    position: float
    weight: float

    def __post_init__(self):
        if self.side not in ("left", "right"):
            raise ParameterRangeError(f"side must be 'left' or 'right', got {self.side!r}")
        if self.weight <= -2.0:
            raise ParameterRangeError(f"force weight {self.weight!r} must be > -2")
        if self.side == "right" and self.position < 0.0:
            raise ParameterRangeError("right force points sit at positions >= 0")
        if self.side == "left" and self.position > 0.0:
            raise ParameterRangeError("left force points sit at positions <= 0")


@dataclass
class DrivingPath:
    """Discretized (W, V) pair: w[k] = W at time k*dt, v[i, k] the i-th force point."""

    kappa: float
    dt: float
    w: np.ndarray
    v: np.ndarray
    forces: tuple[ForceSpec, ...]
    seed: int
    collision_threshold: float

    @property
    def n_steps(self) -> int:
        return self.w.size - 1

    @property
    def horizon(self) -> float:
        return self.n_steps * self.dt

    def times(self) -> np.ndarray:
        return self.dt * np.arange(self.w.size)


@dataclass
class CurveTrace:
    """Traced curve points (closed upper half-plane) at the given capacity times."""

    points: np.ndarray
    capacity_times: np.ndarray


@njit(cache=True)
def _drive_em(kappa, dt, n, x0, rho, side, normals, thr):
    """Euler-Maruyama core.  side=+1 for right points, -1 for left; force
    arrays are ordered rights-ascending then lefts-descending so the ordering
    clamps chain outward from W.  Returns (w, v, bad_step); bad_step >= 0
    flags a drift overshoot at that step."""
    k = x0.shape[0]
    w = np.zeros(n + 1)
    v = np.zeros((k, n + 1))
    for i in range(k):
        v[i, 0] = x0[i]
    sqk = math.sqrt(kappa * dt)
    for s in range(n):
        wc = w[s]
        drift = 0.0
        for i in range(k):
            gap = wc - v[i, s]
            agap = abs(gap)
            if agap >= thr:
                dr = rho[i] * dt / gap
                if abs(dr) > 2.0 * agap:
                    return w, v, s
                drift += dr
            else:
                # collided: evaluate the drift on the floored gap (W sits on
                # the wrong side only transiently; the clamp below restores order)
                drift += rho[i] * dt / (-side[i] * thr)
        wn = wc + sqk * normals[s] + drift
        for i in range(k):
            gap = v[i, s] - wc
            agap = abs(gap)
            vn = v[i, s] + 2.0 * dt / (side[i] * max(agap, thr))
            if side[i] > 0:
                if vn < wn:
                    vn = wn
                if i > 0 and side[i - 1] > 0 and vn < v[i - 1, s + 1]:
                    vn = v[i - 1, s + 1]
            else:
                if vn > wn:
                    vn = wn
                if i > 0 and side[i - 1] < 0 and vn > v[i - 1, s + 1]:
                    vn = v[i - 1, s + 1]
            v[i, s + 1] = vn
        w[s + 1] = wn
    return w, v, -1


def simulate_driving(p: SleParams | float, forces, dt: float, horizon: float,
                     seed: int = 0) -> DrivingPath:
    """Sample the driving pair of SLE_kappa(rho...) up to capacity time horizon.

    `p` is an SleParams bundle or a bare kappa >= 0 (kappa=0 is the
    deterministic zero-noise case).  Deterministic per seed.  Raises
    StepSizeError if the drift of some step would overshoot a force point by
    more than its current gap.
    """
    if dt <= 0 or horizon <= 0:
        raise ParameterRangeError("dt and horizon must be positive")
    kappa = p.kappa if isinstance(p, SleParams) else float(p)
    if kappa < 0:
        raise ParameterRangeError("kappa must be >= 0")
    forces = tuple(forces)
    rights = sorted((f for f in forces if f.side == "right"), key=lambda f: f.position)
    lefts = sorted((f for f in forces if f.side == "left"), key=lambda f: -f.position)
    ordered = tuple(rights) + tuple(lefts)
    x0 = np.array([f.position for f in ordered], dtype=float)
    rho = np.array([f.weight for f in ordered], dtype=float)
    side = np.array([1.0 if f.side == "right" else -1.0 for f in ordered])
    n = int(round(horizon / dt))
    normals = rng_for(seed, 3).standard_normal(n)
    thr = math.sqrt(dt * (kappa + 4.0))
    w, v, bad = _drive_em(kappa, dt, n, x0, rho, side, normals, thr)
    if bad >= 0:
        raise StepSizeError(f"drift overshoot at step {bad} (t={bad * dt:.6g}); reduce dt")
    return DrivingPath(kappa, dt, w, v, ordered, seed, thr)


@njit(cache=True)
def _inverse_slit_sweep(w, dt, sample_idx):
    """gamma(t_k) for each step index k in sample_idx (ascending, >= 1).

    Composes s_k^{-1}(z) = xi_k + sqrt((z - xi_k)^2 - 4 dt) downward from each
    sample's own step, taking the branch with nonnegative imaginary part.
    Returns (points, bad_step); bad_step >= 0 flags a non-finite value.
    """
    m = sample_idx.shape[0]
    active = np.empty(m, dtype=np.complex128)
    count = 0
    ptr = m - 1
    four_dt = 4.0 * dt
    for k in range(sample_idx[m - 1], 0, -1):
        while ptr >= 0 and sample_idx[ptr] == k:
            active[count] = complex(w[k], 0.0)
            count += 1
            ptr -= 1
        xi = w[k]
        for j in range(count):
            u = (active[j] - xi) ** 2 - four_dt
            r = np.sqrt(u)
            if r.imag < 0.0:
                r = -r
            zj = xi + r
            if not (math.isfinite(zj.real) and math.isfinite(zj.imag)):
                return active, k
            active[j] = zj
    return active[::-1].copy(), -1


def _apply_inverse_slits(w: np.ndarray, dt: float, sample_idx: np.ndarray) -> np.ndarray:
    pts, bad = _inverse_slit_sweep(w, dt, sample_idx.astype(np.int64))
    if bad >= 0:
        raise TraceBlowupError(f"non-finite slit composition at step {bad}")
    return pts


def trace_at_indices(d: DrivingPath, idx: np.ndarray) -> CurveTrace:
    """Trace the curve at the given driving step indices (>=1)."""
    idx = np.unique(np.asarray(idx, dtype=np.int64))
    if idx.size and idx[0] < 1:
        raise ValueError("step indices must be >= 1")
    pts = _apply_inverse_slits(d.w, d.dt, idx) if idx.size else np.empty(0, complex)
    pts = np.where(np.abs(pts.imag) < 1e-12, pts.real + 0j, pts)
    return CurveTrace(pts, idx * d.dt)


def trace_curve(d: DrivingPath, resolution: int = 4096) -> CurveTrace:
    """Trace gamma on [0, horizon] with `resolution` points (the first is the
    seed 0 at capacity time 0)."""
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    n = d.n_steps
    idx = np.unique(np.round(np.linspace(1, n, resolution - 1)).astype(np.int64))
    inner = trace_at_indices(d, idx)
    pts = np.concatenate(([complex(d.w[0], 0.0)], inner.points))
    times = np.concatenate(([0.0], inner.capacity_times))
    return CurveTrace(pts, times)


def boundary_hits(d: DrivingPath, tolerance: float, burn_in_steps: int = 20,
                  max_hits: int = 256) -> list[tuple[float, float]]:
    """(capacity time, location on R+) for each run of steps where the gap
    W - V^{1,R} vanishes within tolerance.

    Requires a single right force point.  The first burn_in_steps are skipped:
    a force point starting at 0+ is in contact at t=0 for every rho, and that
    artifact is not a touching event.  Consecutive sub-tolerance steps count
    as one hit; at most max_hits earliest hits are traced for locations.
    """
    if len(d.forces) != 1 or d.forces[0].side != "right":
        raise ParameterRangeError("boundary_hits needs a single right force point")
    gap = d.v[0] - d.w
    hit = gap <= tolerance
    hit[: max(burn_in_steps, 1)] = False
    if not hit.any():
        return []
    idx = np.flatnonzero(hit)
    run_starts = idx[np.concatenate(([True], np.diff(idx) > 1))][:max_hits]
    tr = trace_at_indices(d, run_starts)
    return [(float(t), float(pt.real)) for t, pt in zip(tr.capacity_times, tr.points)]


def _segment_distance(z: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Distance from each point in z to the nearest of the segments (a[j], b[j])."""
    ab = b - a
    denom = np.maximum(np.abs(ab) ** 2, 1e-300)
    t = ((z[:, None] - a[None, :]) * np.conj(ab)[None, :]).real / denom[None, :]
    t = np.clip(t, 0.0, 1.0)
    proj = a[None, :] + t * ab[None, :]
    return np.abs(z[:, None] - proj).min(axis=1)


def halfplane_capacity(t: CurveTrace, n_walks: int = 4000, seed: int = 0,
                       max_segments: int = 400) -> float:
    """Half-plane capacity of the traced hull by harmonic-measure sampling.

    Brownian walkers start high above the hull; hcap ~ y0 * E[Im at first
    hit of hull union R].  Walk-on-spheres steps with radius = distance to
    hull and to the real axis.  For a capacity-parametrized trace the answer
    is ~ 2 * (final capacity time).
    """
    pts = np.asarray(t.points, dtype=complex)
    pts = pts[np.isfinite(pts)]
    if pts.size < 2 or np.max(np.abs(pts)) < 1e-12:
        return 0.0
    if pts.size > max_segments + 1:
        sel = np.unique(np.round(np.linspace(0, pts.size - 1, max_segments + 1)).astype(int))
        pts = pts[sel]
    a, b = pts[:-1], pts[1:]
    scale = float(np.max(np.abs(pts)))
    y0 = 8.0 * scale
    eps = 1e-3 * scale
    rng = rng_for(seed, 5)
    z = np.full(n_walks, 1j * y0, dtype=complex)
    alive = np.arange(n_walks)
    heights = np.zeros(n_walks)
    for _ in range(400):
        if alive.size == 0:
            break
        d_hull = _segment_distance(z[alive], a, b)
        d = np.minimum(d_hull, z[alive].imag)
        done = d < eps
        idx = alive[done]
        heights[idx] = np.maximum(z[idx].imag, 0.0)
        alive = alive[~done]
        if alive.size:
            theta = rng.uniform(0.0, 2.0 * math.pi, size=alive.size)
            z[alive] = z[alive] + d[~done] * np.exp(1j * theta)
            z[alive] = z[alive].real + 1j * np.maximum(z[alive].imag, 0.0)
    return float(y0 * heights.mean())


def segment_self_intersections(t: CurveTrace, skip_adjacent: int = 1) -> int:
    """Count proper crossings between non-adjacent segments of the polyline."""
    p = np.asarray(t.points, dtype=complex)
    a, b = p[:-1], p[1:]
    n = a.size
    count = 0
    chunk = 512
    for i0 in range(0, n, chunk):
        i1 = min(i0 + chunk, n)
        ai, bi = a[i0:i1, None], b[i0:i1, None]
        j0 = np.arange(i0, i1)[:, None] + skip_adjacent + 1
        aj, bj = a[None, :], b[None, :]
        d1 = bi - ai
        d2 = bj - aj
        cr = (d1.real * d2.imag - d1.imag * d2.real)
        q = aj - ai
        with np.errstate(divide="ignore", invalid="ignore"):
            s = (q.real * d2.imag - q.imag * d2.real) / cr
            u = (q.real * d1.imag - q.imag * d1.real) / cr
        valid = (np.arange(n)[None, :] >= j0) & (np.abs(cr) > 1e-300)
        crossing = valid & (s > 1e-9) & (s < 1 - 1e-9) & (u > 1e-9) & (u < 1 - 1e-9)
        count += int(crossing.sum())
    return count
