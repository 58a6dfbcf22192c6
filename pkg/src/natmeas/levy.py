"""Stable subordinators, occupation measures, Bessel zero sets, and the
size-biased first-passage law of the gasket-mass variable.

Jump representation: Levy density C x^(-1-beta) with C = c*beta/Gamma(1-beta),
so the untruncated Laplace exponent is exactly c*lambda^beta.  Jumps below
`cutoff` are dropped; their expected mass can be restored as a deterministic
drift (drift_comp), which keeps the Laplace exponent within
O(lambda^2 cutoff^(2-beta)) of the exact one.  beta=1 is the degenerate
deterministic path tau_t = c*t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gamma as gamma_fn

from .params import ParameterRangeError
from .rng import rng_for

__all__ = [
    "SubordinatorPath",
    "OccupationMeasure",
    "LaplaceFit",
    "BesselZeroSet",
    "FirstPassageSample",
    "sample_subordinator",
    "sample_tau_batch",
    "laplace_fit",
    "occupation_measure",
    "bessel_zero_set",
    "bessel_zero_dimension",
    "first_passage_sizebias",
    "sizebias_resample",
    "fit_tail_slope",
    "ks_two_sample",
    "KS_CRIT_1PCT",
]

# sqrt(-ln(alpha/2)/2) at alpha=0.01, for the two-sample KS critical value
KS_CRIT_1PCT = math.sqrt(-math.log(0.005) / 2.0)


def _check_beta(beta: float) -> float:
    beta = float(beta)
    if not 0.0 < beta <= 1.0:
        raise ParameterRangeError(f"beta={beta!r} outside (0, 1]")
    return beta


def _levy_constants(beta: float, c: float, cutoff: float) -> tuple[float, float, float]:
    """(jump rate above cutoff, density constant C, compensation drift rate)."""
    c_dens = c * beta / gamma_fn(1.0 - beta)
    rate = c_dens * cutoff ** (-beta) / beta
    drift = c_dens * cutoff ** (1.0 - beta) / (1.0 - beta)
    return rate, c_dens, drift


@dataclass
class SubordinatorPath:
    """One sampled path t -> tau_t on [0, horizon].

    The evaluated path is drift_comp * t plus the jumps up to t; it is
    nondecreasing with tau_0 = 0 and right-continuous at jump times.  For
    beta=1 there are no jumps and drift_comp = c (tau_t = c*t exactly).
    """

    beta: float
    c_scale: float
    jump_times: np.ndarray
    jump_sizes: np.ndarray
    small_jump_cutoff: float
    drift_comp: float
    horizon: float
    seed: int
    _cum: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._cum = np.concatenate(([0.0], np.cumsum(self.jump_sizes)))

    def evaluate(self, t):
        """tau_t for scalar or array t in [0, horizon]."""
        t = np.asarray(t, dtype=float)
        if np.any(t < 0) or np.any(t > self.horizon):
            raise ValueError("t outside [0, horizon]")
        idx = np.searchsorted(self.jump_times, t, side="right")
        out = self.drift_comp * t + self._cum[idx]
        return float(out) if out.ndim == 0 else out


def sample_subordinator(beta: float, c: float, horizon: float, cutoff: float = 1e-8,
                        seed: int = 0, compensate: bool = True) -> SubordinatorPath:
    """Poissonian jump sample of a beta-stable subordinator on [0, horizon].

    Laplace transform target: E exp(-lambda tau_t) = exp(-c t lambda^beta).
    """
    beta = _check_beta(beta)
    if cutoff <= 0:
        raise ParameterRangeError("cutoff must be positive")
    if beta == 1.0:
        empty = np.empty(0)
        return SubordinatorPath(beta, c, empty, empty, cutoff, c, horizon, seed)
    rng = rng_for(seed, 7)
    rate, _, drift = _levy_constants(beta, c, cutoff)
    n = rng.poisson(rate * horizon)
    times = np.sort(rng.uniform(0.0, horizon, size=n))
    sizes = cutoff * rng.uniform(size=n) ** (-1.0 / beta)
    return SubordinatorPath(beta, c, times, sizes, cutoff,
                            drift if compensate else 0.0, horizon, seed)


def sample_tau_batch(beta: float, c: float, t: float, n_paths: int, cutoff: float = 1e-8,
                     seed: int = 0, compensate: bool = True) -> np.ndarray:
    """tau_t over n_paths independent paths, without building path objects."""
    beta = _check_beta(beta)
    if beta == 1.0:
        return np.full(n_paths, c * t)
    rng = rng_for(seed, 11)
    rate, _, drift = _levy_constants(beta, c, cutoff)
    counts = rng.poisson(rate * t, size=n_paths)
    total = int(counts.sum())
    sizes = cutoff * rng.uniform(size=total) ** (-1.0 / beta)
    bounds = np.concatenate(([0], np.cumsum(counts)))
    sums = np.add.reduceat(np.concatenate((sizes, [0.0])), bounds[:-1])
    sums[counts == 0] = 0.0
    out = sums + (drift * t if compensate else 0.0)
    return out


@dataclass
class LaplaceFit:
    beta_hat: float
    c_hat: float
    beta_se: float
    c_se: float
    lambdas: np.ndarray
    psi: np.ndarray


def laplace_fit(paths, lambdas) -> LaplaceFit:
    """Regress -log E[exp(-lambda tau_1)] on log lambda.

    `paths` is either a sequence of SubordinatorPath (evaluated at t=1) or an
    array of tau_1 samples; needs >= 1e3 samples for the contract tolerances.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < 2 or np.ptp(np.log(lambdas)) < 1e-12:
        raise ValueError("degenerate lambda grid")
    if len(paths) and isinstance(paths[0], SubordinatorPath):
        tau = np.array([p.evaluate(1.0) for p in paths])
    else:
        tau = np.asarray(paths, dtype=float)
    ee = np.exp(-np.outer(lambdas, tau)).mean(axis=1)
    psi = -np.log(ee)
    x = np.log(lambdas)
    y = np.log(psi)
    xbar, ybar = x.mean(), y.mean()
    sxx = np.sum((x - xbar) ** 2)
    slope = np.sum((x - xbar) * (y - ybar)) / sxx
    intercept = ybar - slope * xbar
    resid = y - (intercept + slope * x)
    dof = max(x.size - 2, 1)
    s2 = np.sum(resid ** 2) / dof
    beta_se = math.sqrt(s2 / sxx)
    int_se = math.sqrt(s2 * (1.0 / x.size + xbar ** 2 / sxx))
    c_hat = math.exp(intercept)
    return LaplaceFit(float(slope), c_hat, beta_se, c_hat * int_se, lambdas, psi)


@dataclass
class OccupationMeasure:
    """Pushforward of Lebesgue time through tau: the local time on the range.

    Piecewise representation: segment i holds mass masses[i] (the waiting time)
    spread over the range interval [breakpoints[i], breakpoints[i]+widths[i]]
    (width 0 collapses to an atom: pure-jump holding).  cdf(x) = m[0, x] is
    the generalized inverse of tau, and cdf at the top of the range returns
    the horizon exactly.
    """

    breakpoints: np.ndarray
    widths: np.ndarray
    masses: np.ndarray
    horizon: float
    range_end: float

    def cdf(self, x):
        """m[0, x], vectorized."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.empty(x.shape)
        for i, xi in enumerate(x):
            if xi >= self.range_end:
                out[i] = self.horizon
                continue
            frac = np.clip(
                np.divide(xi - self.breakpoints, self.widths,
                          out=np.where(xi >= self.breakpoints, 1.0, 0.0) * np.ones_like(self.widths),
                          where=self.widths > 0),
                0.0, 1.0)
            out[i] = float(np.sum(frac * self.masses))
        return out if out.size > 1 else float(out[0])

    def total_mass(self) -> float:
        return self.horizon


def occupation_measure(path: SubordinatorPath, horizon: float | None = None) -> OccupationMeasure:
    """Occupation measure of the path's range up to `horizon` (default: full)."""
    if horizon is None:
        horizon = path.horizon
    if horizon > path.horizon:
        raise ValueError("path not defined past requested horizon")
    keep = path.jump_times <= horizon
    jt = path.jump_times[keep]
    js = path.jump_sizes[keep]
    # segment start times and the value of tau just after each event
    t0 = np.concatenate(([0.0], jt))
    t1 = np.concatenate((jt, [horizon]))
    v0 = path.drift_comp * t0 + np.concatenate(([0.0], np.cumsum(js)))
    masses = t1 - t0
    widths = path.drift_comp * masses
    pos = masses > 0
    return OccupationMeasure(v0[pos], widths[pos], masses[pos], float(horizon),
                             float(path.evaluate(horizon)))


# ---------------------------------------------------------------------------
# Bessel zero sets

try:  # pragma: no cover - exercised indirectly
    from numba import njit
except ImportError:  # pragma: no cover
    def njit(*a, **k):
        def wrap(f):
            return f
        return wrap if not (len(a) == 1 and callable(a[0])) else a[0]


@njit(cache=True)
def _besq_zero_flags(dim, dt, seed, n):
    """Squared Bessel stepped by its exact transition, with a Bessel-bridge
    zero test per step.

    Z_{t+dt} | Z_t = z is dt * chi'^2(dim, z/dt), sampled as a Poisson-mixed
    Gamma (chi'^2(d, lam) = chi^2(d + 2N), N ~ Poisson(lam/2)).  In Bessel
    coordinates R = sqrt(Z) the diffusion coefficient is 1, so the bridge
    zero probability between endpoints is exp(-2 r_a r_b / dt).
    """
    np.random.seed(seed)
    flags = np.zeros(n, np.bool_)
    z = 0.0
    for i in range(n):
        a = z
        if a > 0.0:
            npois = np.random.poisson(a / (2.0 * dt))
            zn = dt * 2.0 * np.random.standard_gamma(0.5 * dim + npois)
        else:
            zn = dt * 2.0 * np.random.standard_gamma(0.5 * dim)
        hit = False
        if a <= 0.0:
            hit = True
        else:
            p = math.exp(-2.0 * math.sqrt(a * zn) / dt)
            if np.random.random() < p:
                hit = True
        flags[i] = hit
        z = zn
    return flags


@dataclass
class BesselZeroSet:
    dim: float
    dt: float
    horizon: float
    intervals: np.ndarray  # (k, 2) start/end times of flagged runs
    scales: np.ndarray
    counts: np.ndarray
    dim_estimate: float


def bessel_zero_set(dim: float, dt: float, horizon: float, seed: int = 0) -> BesselZeroSet:
    """Zero set of a dim-dimensional Bessel process, with a box-count estimate
    of its dimension (target 1 - dim/2)."""
    if not 0.0 < dim < 2.0:
        raise ParameterRangeError(f"dim={dim!r} outside (0, 2): zero set empty or degenerate")
    n = int(round(horizon / dt))
    # numba kernel uses its own 32-bit-seeded stream; mix the seed here
    flags = _besq_zero_flags(dim, dt, (seed * 2654435761 + 12345) % (2 ** 31), n)

    # merged zero intervals
    idx = np.flatnonzero(flags)
    if idx.size:
        breaks = np.flatnonzero(np.diff(idx) > 1)
        starts = np.concatenate(([idx[0]], idx[breaks + 1]))
        ends = np.concatenate((idx[breaks], [idx[-1]])) + 1
        intervals = np.column_stack((starts * dt, ends * dt))
    else:
        intervals = np.empty((0, 2))

    # dyadic box counts between 8*dt and horizon/64
    scales, counts = [], []
    j = 3
    while (1 << j) * dt <= horizon / 64.0:
        block = 1 << j
        m = (n // block) * block
        any_hit = flags[:m].reshape(-1, block).any(axis=1)
        scales.append(block * dt)
        counts.append(int(any_hit.sum()))
        j += 1
    scales = np.array(scales)
    counts = np.array(counts, dtype=float)
    good = counts > 0
    if good.sum() >= 2:
        slope = np.polyfit(np.log(scales[good]), np.log(counts[good]), 1)[0]
        est = -slope
    else:
        est = 0.0
    return BesselZeroSet(dim, dt, horizon, intervals, scales, counts, float(est))


def bessel_zero_dimension(dim: float, dt: float, horizon: float, n_seeds: int = 12,
                          seed: int = 0, lo_mult: int = 16, hi_frac: int = 16) -> float:
    """Box dimension of the Bessel zero set, pooling counts across seeds.

    Fits log mean-count against log scale on [lo_mult*dt, horizon/hi_frac];
    the smallest scales carry the discretization artifacts and are excluded.
    """
    runs = [bessel_zero_set(dim, dt, horizon, seed=seed + 1000 * k) for k in range(n_seeds)]
    scales = runs[0].scales
    mean_counts = np.mean([r.counts for r in runs], axis=0)
    good = (scales >= lo_mult * dt) & (scales <= horizon / hi_frac) & (mean_counts >= 5)
    if good.sum() < 2:
        raise ValueError("not enough usable box-count scales")
    slope = np.polyfit(np.log(scales[good]), np.log(mean_counts[good]), 1)[0]
    return float(-slope)


# ---------------------------------------------------------------------------
# Spectrally positive first passage and the duration tilt

@dataclass
class FirstPassageSample:
    """Raw first-passage times tau_{-1} and the tilted samples Y'."""

    beta_prime: float
    tau: np.ndarray
    censored: np.ndarray
    samples: np.ndarray  # tilted draws, length n
    tilt_power: float
    cutoff: float
    t_cap: float
    seed: int


def _first_passage_taus(beta_prime: float, n: int, seed: int, cutoff: float,
                        t_cap: float) -> tuple[np.ndarray, np.ndarray]:
    """Simulate the mean-zero spectrally positive beta'-stable process
    (Levy measure x^(-beta'-1) dx on x>0) and record the passage time at -1.

    Jumps above `cutoff` are exact Poisson events; smaller jumps enter as the
    compensated Brownian proxy, so between jumps the segment is a drifted BM
    whose level crossing is detected exactly (endpoint + bridge probability).
    """
    bp = beta_prime
    lam = cutoff ** (-bp) / bp                    # jump rate
    m_comp = cutoff ** (1.0 - bp) / (bp - 1.0)    # compensation of jumps > cutoff
    v_small = cutoff ** (2.0 - bp) / (2.0 - bp)   # variance rate of small jumps
    rng = rng_for(seed, 31)

    x = np.zeros(n)
    t = np.zeros(n)
    tau = np.full(n, t_cap)
    censored = np.ones(n, dtype=bool)
    alive = np.arange(n)
    level = -1.0
    while alive.size:
        m = alive.size
        dt = rng.exponential(1.0 / lam, size=m)
        xe = x[alive] - m_comp * dt + np.sqrt(v_small * dt) * rng.standard_normal(m)
        u_bridge = rng.uniform(size=m)
        u_jump = rng.uniform(size=m)

        a = x[alive] - level
        b = xe - level
        direct = b <= 0.0
        bridge = np.zeros(m, dtype=bool)
        nb = ~direct
        bridge[nb] = u_bridge[nb] < np.exp(-2.0 * a[nb] * b[nb] / (v_small * dt[nb]))
        crossed = direct | bridge

        frac = np.where(direct, a / np.maximum(a - b, 1e-300), 0.5)
        tau_new = t[alive] + dt * frac
        hit_idx = alive[crossed]
        tau[hit_idx] = tau_new[crossed]
        censored[hit_idx] = False

        t[alive] += dt
        x[alive] = xe + cutoff * u_jump ** (-1.0 / bp)
        still = ~crossed & (t[alive] < t_cap)
        alive = alive[still]
    return tau, censored


def sizebias_resample(values: np.ndarray, power: float, n_out: int, seed: int) -> np.ndarray:
    """Importance resampling with weights values**power."""
    w = np.asarray(values, dtype=float) ** power
    w = w / w.sum()
    rng = rng_for(seed, 37)
    return np.asarray(values)[rng.choice(values.size, size=n_out, p=w)]


def first_passage_sizebias(beta_prime: float, n: int, seed: int = 0, *,
                           pool: int | None = None, cutoff: float = 1e-2,
                           t_cap: float = 200.0, tilt_power: float = -1.0) -> FirstPassageSample:
    """n samples of the duration-tilted first-passage variable Y'.

    The default tilt_power -1 is the duration weighting that produces the
    gasket-mass law (survival exponent -(1+1/beta')); tilt_power +1 is plain
    size-biasing.
    """
    if not 1.0 < beta_prime < 2.0:
        raise ParameterRangeError(f"beta_prime={beta_prime!r} outside (1, 2)")
    m = pool if pool is not None else max(n, 50_000)
    tau, censored = _first_passage_taus(beta_prime, m, seed, cutoff, t_cap)
    samples = sizebias_resample(tau, tilt_power, n, seed + 1)
    return FirstPassageSample(beta_prime, tau, censored, samples, tilt_power,
                              cutoff, t_cap, seed)


def fit_tail_slope(values: np.ndarray, x_lo: float, x_hi: float, n_grid: int = 12,
                   weights: np.ndarray | None = None) -> float:
    """OLS slope of log P(X > x) against log x over a log-spaced grid."""
    values = np.asarray(values, dtype=float)
    if weights is None:
        weights = np.ones_like(values)
    wsum = weights.sum()
    grid = np.geomspace(x_lo, x_hi, n_grid)
    surv = np.array([(weights[values > g]).sum() / wsum for g in grid])
    good = surv > 0
    if good.sum() < 2:
        raise ValueError("tail grid has no support")
    return float(np.polyfit(np.log(grid[good]), np.log(surv[good]), 1)[0])


def ks_two_sample(a: np.ndarray, b: np.ndarray) -> tuple[float, float]:
    """(KS statistic, 1% critical value) for two independent samples."""
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    allv = np.concatenate((a, b))
    cdfa = np.searchsorted(a, allv, side="right") / a.size
    cdfb = np.searchsorted(b, allv, side="right") / b.size
    d = float(np.max(np.abs(cdfa - cdfb)))
    crit = KS_CRIT_1PCT * math.sqrt((a.size + b.size) / (a.size * b.size))
    return d, crit
