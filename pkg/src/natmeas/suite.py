"""Regression suite: every checkable contract as a named check with a pinned
tolerance.

fast: exact identities and the tiny-lattice oracles (< 60 s).
full: fast plus the Monte-Carlo batteries at their acceptance scales.
Each check returns a CheckResult; the suite report prints one line per check.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import gmc as gmc_mod
from . import levy as levy_mod
from . import params as params_mod
from .perc import (
    AnnulusSpec,
    arm_probability,
    area_measure,
    ball_mass_scaling,
    crossing_probability,
    energy_estimate,
    four_arm_sites,
    pivotal_measure,
    pseudo_interface,
    sample_config,
)
from .perc.arms import site_pivotal_for_box
from .rng import rng_for

__all__ = ["CheckResult", "regression_suite", "FAST_CHECKS", "FULL_CHECKS", "format_report",
           "RAW_TABLES"]

# raw fit points recorded by the slope checks (cleared per suite run); the
# report tool recomputes every fitted slope from these instead of trusting
# the summary values
RAW_TABLES: dict[str, list[dict]] = {}


def _record_raw(table: str, rows: list[dict]) -> None:
    RAW_TABLES.setdefault(table, []).extend(rows)


@dataclass
class CheckResult:
    name: str
    group: str
    value: float
    target: float
    tol: float
    passed: bool
    seconds: float = 0.0
    detail: str = ""

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return (f"[{flag}] {self.name}: value={self.value:.6g} target={self.target:.6g} "
                f"tol={self.tol:.3g} ({self.seconds:.1f}s){' ' + self.detail if self.detail else ''}")


def _result(name, group, value, target, tol, t0, detail="") -> CheckResult:
    return CheckResult(name, group, float(value), float(target), float(tol),
                       abs(value - target) <= tol, time.time() - t0, detail)


# ---------------------------------------------------------------------------
# fast checks

def check_dimensions_exact() -> list[CheckResult]:
    t0 = time.time()
    p6 = params_mod.SleParams(6.0)
    p3 = params_mod.SleParams(3.0)
    out = [
        _result("dim.cut_points.kp6", "exact", params_mod.dimension(params_mod.CUT_POINTS, p6), 0.75, 0.0, t0),
        _result("dim.pivotal.kp6", "exact", params_mod.dimension(params_mod.PIVOTAL, p6), 0.75, 0.0, t0),
        _result("dim.gasket.kp6", "exact", params_mod.dimension(params_mod.GASKET, p6), 91 / 48, 0.0, t0),
        _result("index.cut_points.kp6", "exact", params_mod.subordinator_index("cut_points", p6), 0.5, 0.0, t0),
        _result("index.pivotal.kp6", "exact", params_mod.subordinator_index("pivotal", p6), 0.5, 0.0, t0),
        _result("index.carpet.k3", "exact", params_mod.subordinator_index("carpet_cpi_mass", p3), 0.6, 0.0, t0),
    ]
    return out


def check_kpz_grids() -> list[CheckResult]:
    out = []
    t0 = time.time()
    worst = 0.0
    for k in np.linspace(0.2, 3.8, 20):
        p = params_mod.SleParams(k)
        width = k / 2.0
        for rho in np.linspace(-2.0 + width / 40, k / 2 - 2.0 - width / 40, 20):
            worst = max(worst, abs(params_mod.kpz_residual(params_mod.BOUNDARY_TOUCHING(rho), p)))
    out.append(_result("kpz.boundary_touching.grid", "exact", worst, 0.0, 1e-12, t0))
    for kind, lo, hi in ((params_mod.CUT_POINTS, 4.0, 8.0), (params_mod.PIVOTAL, 4.0, 8.0),
                         (params_mod.GASKET, 4.0, 8.0), (params_mod.CARPET, 8 / 3, 4.0)):
        t0 = time.time()
        worst = max(abs(params_mod.kpz_residual(kind, params_mod.SleParams(k)))
                    for k in np.linspace(lo + 1e-3, hi - 1e-3, 20))
        out.append(_result(f"kpz.{kind.tag}.grid", "exact", worst, 0.0, 1e-12, t0))
    return out


def check_levy_exact() -> list[CheckResult]:
    t0 = time.time()
    path = levy_mod.sample_subordinator(1.0, 2.0, 3.0, seed=0)
    out = [_result("levy.beta1.deterministic", "exact", path.evaluate(3.0), 6.0, 0.0, t0)]
    t0 = time.time()
    p = levy_mod.sample_subordinator(0.5, 1.0, 4.0, cutoff=1e-6, seed=2)
    m = levy_mod.occupation_measure(p)
    out.append(_result("levy.occupation.total_mass", "exact",
                       m.cdf(p.evaluate(4.0)), 4.0, 0.0, t0))
    return out


def check_gmc_exact() -> list[CheckResult]:
    t0 = time.time()
    n = 128
    f = gmc_mod.sample_gff(n, seed=1)
    m0 = gmc_mod.gmc_measure(f, 0.0, 6 / (n - 1))
    area = f.spacing ** 2
    worst = float(np.max(np.abs(m0.masses[m0.valid] - area)))
    out = [_result("gmc.gamma0.area_exact", "exact", worst, 0.0, 0.0, t0)]
    t0 = time.time()
    g, c = 0.5, 0.3
    m1 = gmc_mod.gmc_measure(f, g, 6 / (n - 1))
    m2 = gmc_mod.gmc_measure(gmc_mod.GridField(n, f.values + c, f.seed), g, 6 / (n - 1))
    ratio = m2.masses[m2.valid] / m1.masses[m1.valid]
    worst = float(np.max(np.abs(ratio - math.exp(g * c))))
    out.append(_result("gmc.constant_shift.exact", "exact", worst, 0.0, 1e-12, t0))
    return out


def check_flip_oracle(full_enumeration: bool = False) -> list[CheckResult]:
    """four_arm_sites' pivotality criterion vs the exhaustive flip oracle on
    the 4x4 crossing box."""
    t0 = time.time()
    bounds = (0, 3, 0, 3)
    mismatches = 0
    configs = range(1 << 16) if full_enumeration else \
        rng_for(99, 0).integers(0, 1 << 16, size=3000)
    for cfg in configs:
        cfg = int(cfg)
        colors = np.array([(cfg >> b) & 1 for b in range(16)], dtype=np.uint8).reshape(4, 4)
        for y in range(4):
            for x in range(4):
                c_open = colors.copy()
                c_open[y, x] = 1
                c_closed = colors.copy()
                c_closed[y, x] = 0
                oracle = crossing_probability(c_open) != crossing_probability(c_closed)
                if site_pivotal_for_box(colors, (y, x), bounds) != oracle:
                    mismatches += 1
    name = "perc.flip_oracle." + ("complete" if full_enumeration else "sampled")
    return [_result(name, "oracle", mismatches, 0.0, 0.0, t0,
                    detail=f"{'65536' if full_enumeration else '3000'} configs x 16 sites")]


def check_determinism() -> list[CheckResult]:
    from .cli import ExperimentSpec, run_trials_serialized

    t0 = time.time()
    spec = ExperimentSpec("levy", {"beta": 0.7, "c": 1.0, "cutoff": 1e-4}, trials=64,
                          seed=123, threads=1)
    a = run_trials_serialized(spec)
    b = run_trials_serialized(spec)
    spec8 = ExperimentSpec("levy", {"beta": 0.7, "c": 1.0, "cutoff": 1e-4}, trials=64,
                           seed=123, threads=8)
    c = run_trials_serialized(spec8)
    same = (a == b) and (a == c)
    return [_result("cli.determinism.threads", "oracle", 0.0 if same else 1.0, 0.0, 0.0, t0,
                    detail="identical NDJSON for repeat run and threads 1 vs 8")]


# ---------------------------------------------------------------------------
# full checks

def check_laplace_round_trip() -> list[CheckResult]:
    out = []
    lams = np.geomspace(0.1, 3.0, 100)
    cutoffs = {0.3: 1e-8, 0.5: 1e-7, 0.7: 1e-6, 0.9: 1e-5}
    for beta in (0.3, 0.5, 0.7, 0.9):
        t0 = time.time()
        tau = levy_mod.sample_tau_batch(beta, 1.0, 1.0, 10_000, cutoff=cutoffs[beta], seed=42)
        fit = levy_mod.laplace_fit(tau, lams)
        _record_raw("laplace_records", [{"beta": beta, "lam": float(l), "psi": float(ps)}
                                        for l, ps in zip(fit.lambdas, fit.psi)])
        out.append(_result(f"levy.laplace.beta{beta}", "levy", fit.beta_hat, beta, 0.05, t0))
    return out


def check_scaling_ks() -> list[CheckResult]:
    t0 = time.time()
    t1 = levy_mod.sample_tau_batch(0.7, 1.0, 1.0, 10_000, cutoff=1e-6, seed=5)
    t4 = levy_mod.sample_tau_batch(0.7, 1.0, 4.0, 10_000, cutoff=1e-6, seed=6)
    d, crit = levy_mod.ks_two_sample(t4, 4.0 ** (1 / 0.7) * t1)
    r = CheckResult("levy.scaling.ks", "levy", d, 0.0, crit, d < crit, time.time() - t0,
                    detail=f"1% critical value {crit:.4f}")
    return [r]


def check_first_passage_tail() -> list[CheckResult]:
    t0 = time.time()
    bp = 7 / 6
    fp = levy_mod.first_passage_sizebias(bp, 20_000, seed=11, pool=100_000)
    slope = levy_mod.fit_tail_slope(fp.tau, 1.5, 20.0, weights=fp.tau ** fp.tilt_power)
    return [_result("levy.first_passage.tail_slope", "levy", slope, -(1 + 1 / bp), 0.15, t0)]


def check_bessel_dimensions() -> list[CheckResult]:
    out = []
    for dim in (2 / 3, 1.0, 4 / 3):
        t0 = time.time()
        est = levy_mod.bessel_zero_dimension(dim, 2e-6, 2.0, n_seeds=12, seed=int(dim * 100))
        out.append(_result(f"levy.bessel_zero.dim{dim:.3f}", "levy", est, 1 - dim / 2, 0.07, t0))
    return out


def check_girsanov_battery() -> list[CheckResult]:
    def battery():
        return [
            lambda v: math.tanh(v[20:40, 20:40].mean()),
            lambda v: float(np.clip(v[32, 16], -3, 3)),
            lambda v: math.sin(v[10:54, 10:54].mean()),
            lambda v: 1.0 if v[30:34, 30:34].mean() > 0 else 0.0,
            lambda v: math.tanh(abs(v[16:48, 40:60].mean())),
        ]

    out = []
    for gamma in (0.25, 0.5, 1.0):
        t0 = time.time()
        worst = 0.0
        for i, stat in enumerate(battery()):
            r = gmc_mod.girsanov_check(128, gamma, (0.4, 0.55), stat, 3000, 0.06,
                                       seed=1000 * i)
            worst = max(worst, abs(r.zscore))
        out.append(_result(f"gmc.girsanov.gamma{gamma}", "gmc", worst, 0.0, 3.0, t0,
                           detail="worst |z| over 5 statistics, n=128"))
    return out


def check_coordinate_change() -> list[CheckResult]:
    n = 257
    out = []
    t0 = time.time()
    r = gmc_mod.coordinate_change_check(n, 0.5, 0.5, 8 / (n - 1), n_seeds=200, seed=0)
    out.append(_result("gmc.coord_change.gamma0.5", "gmc", r.discrepancy, 0.0, 0.10, t0))
    t0 = time.time()
    r = gmc_mod.coordinate_change_check(n, 0.5, 1.0, 8 / (n - 1), n_seeds=800, seed=5)
    out.append(_result("gmc.coord_change.gamma1.0", "gmc", r.discrepancy, 0.0, 0.10, t0))
    return out


def check_circle_average_variance() -> list[CheckResult]:
    t0 = time.time()
    n = 128
    eps = np.array([4, 6, 8, 12, 16, 24, 32]) / (n - 1)
    v = np.array([gmc_mod.mollified_variance(n, (0.5, 0.5), e) for e in eps])
    _record_raw("circle_var_records", [{"eps": float(e), "variance": float(vv), "fitted": 1}
                                       for e, vv in zip(eps, v)])
    x = np.log(1.0 / eps)
    design = np.vstack([x, np.ones_like(x)]).T
    coef, *_ = np.linalg.lstsq(design, v, rcond=None)
    pred = design @ coef
    r2 = 1.0 - np.sum((v - pred) ** 2) / np.sum((v - v.mean()) ** 2)
    out = [_result("gmc.circle_var.slope", "gmc", coef[0], 1.0, 0.1, t0),
           CheckResult("gmc.circle_var.r2", "gmc", float(r2), 1.0, 0.05, r2 > 0.95,
                       time.time() - t0)]
    return out


def check_gmc_mass_stability() -> list[CheckResult]:
    t0 = time.time()
    n = 256
    s_box = (0.375, 0.625)
    means = []
    for eps_cells in (4, 8, 16):
        eps = eps_cells / (n - 1)
        tot = sum(gmc_mod.gmc_measure(gmc_mod.sample_gff(n, seed=100 + s), 0.5, eps)
                  .box_mass(*s_box, *s_box) for s in range(60))
        means.append(tot / 60)
    mm = np.array(means)
    spread = (mm.max() - mm.min()) / mm.mean()
    return [_result("gmc.mass.eps_stability", "gmc", spread, 0.0, 0.05, t0,
                    detail=f"means {np.round(mm, 5).tolist()}")]


_ALPHA1_CACHE: dict = {}


def one_arm_alpha(r_out: float, trials: int, seed: int = 0) -> float:
    key = (round(r_out, 6), trials, seed)
    if key not in _ALPHA1_CACHE:
        _ALPHA1_CACHE[key] = arm_probability(AnnulusSpec(0.5, r_out), trials, seed=seed).p_hat
    return _ALPHA1_CACHE[key]


def check_one_arm_slope() -> list[CheckResult]:
    t0 = time.time()
    radii = [16, 32, 64, 128, 256]
    trials = {16: 120_000, 32: 100_000, 64: 60_000, 128: 30_000, 256: 15_000}
    ps = [one_arm_alpha(R, trials[R], seed=777 + R) for R in radii]
    _record_raw("one_arm_records", [{"radius": R, "alpha": float(p), "trials": trials[R],
                                     "fitted": int(i > 0)}
                                    for i, (R, p) in enumerate(zip(radii, ps))])
    x = np.log(1.0 / np.array(radii))
    slope = np.polyfit(x[1:], np.log(ps)[1:], 1)[0]  # smallest scale dropped
    return [_result("perc.one_arm.slope", "perc", slope, 5 / 48, 0.04, t0,
                    detail=f"alpha_1 {np.round(ps, 4).tolist()}")]


_ALPHA4_CACHE: dict = {}


def four_arm_alpha(r_out: float, trials: int, seed: int = 0) -> float:
    key = (round(r_out, 6), trials, seed)
    if key not in _ALPHA4_CACHE:
        pat = ("open", "closed", "open", "closed")
        _ALPHA4_CACHE[key] = arm_probability(AnnulusSpec(1.0, r_out, pat), trials,
                                             seed=seed).p_hat
    return _ALPHA4_CACHE[key]


def check_four_arm_slope() -> list[CheckResult]:
    t0 = time.time()
    radii = [8, 16, 32, 64]
    trials = {8: 60_000, 16: 60_000, 32: 50_000, 64: 40_000}
    ps = [four_arm_alpha(R, trials[R], seed=900 + R) for R in radii]
    _record_raw("four_arm_records", [{"radius": R, "alpha": float(p), "trials": trials[R],
                                      "fitted": int(i > 0)}
                                     for i, (R, p) in enumerate(zip(radii, ps))])
    x = np.log(1.0 / np.array(radii))
    slope = np.polyfit(x[1:], np.log(ps)[1:], 1)[0]
    return [_result("perc.four_arm.slope", "perc", slope, 1.25, 0.15, t0,
                    detail=f"alpha_4 {np.round(ps, 5).tolist()}")]


def check_pivotal_scaling() -> list[CheckResult]:
    t0 = time.time()
    alpha4 = four_arm_alpha(64.0, 40_000, seed=964)
    radii = np.array([4, 6, 8, 12, 16, 24, 32], float)
    measures = [pivotal_measure(sample_config(512, "box", seed=3000 + s), 64, alpha4)
                for s in range(24)]
    slope, mm = ball_mass_scaling(measures, radii)
    _record_raw("pivotal_scaling_records", [{"radius": float(r), "ball_mass": float(v),
                                             "fitted": int(i > 0)}
                                            for i, (r, v) in enumerate(zip(radii, mm))])
    return [_result("perc.pivotal.scaling", "perc", slope, 0.75, 0.10, t0,
                    detail=f"{sum(m.atoms.shape[0] for m in measures)} atoms, n=512")]


def check_area_scaling() -> list[CheckResult]:
    t0 = time.time()
    alpha1 = one_arm_alpha(256.0, 15_000, seed=777 + 256)
    measures = [area_measure(sample_config(256, "disk", seed=4000 + s),
                             AnnulusSpec(128.0, 256.0), alpha1) for s in range(16)]
    radii = np.array([4, 6, 8, 12, 16, 24, 32, 48], float)
    slope, mm = ball_mass_scaling(measures, radii, anchor_within=64.0)
    _record_raw("area_scaling_records", [{"radius": float(r), "ball_mass": float(v),
                                          "fitted": int(i > 0)}
                                         for i, (r, v) in enumerate(zip(radii, mm))])
    return [_result("perc.area.scaling", "perc", slope, 91 / 48, 0.10, t0)]


def check_area_stability() -> list[CheckResult]:
    t0 = time.time()
    trials = {64: 60_000, 128: 30_000, 256: 15_000}
    means = []
    for n in (64, 128, 256):
        alpha1 = one_arm_alpha(float(n), trials[n], seed=777 + n)
        tot = 0.0
        reps = 24
        for s in range(reps):
            lam = area_measure(sample_config(n, "disk", seed=5000 + s),
                               AnnulusSpec(n / 2, float(n)), alpha1)
            tot += lam.total()
        means.append(tot / reps)
    mm = np.array(means)
    spread = (mm.max() - mm.min()) / mm.mean()
    return [_result("perc.area.normalization_stability", "perc", spread, 0.0, 0.15, t0,
                    detail=f"E[lambda(I)] {np.round(mm, 4).tolist()}")]


def check_quasi_mult() -> list[CheckResult]:
    from .perc import quasi_mult_check

    t0 = time.time()
    q = quasi_mult_check(2.0, 8.0, 32.0, trials=40_000, seed=9)
    r1 = CheckResult("perc.quasi_mult.upper", "perc", q.p_13, q.p_12 * q.p_23,
                     3.0 * math.sqrt(q.se_13 ** 2 + q.se_prod ** 2),
                     q.upper_bound_holds and q.p_13 <= q.p_12 * q.p_23 +
                     3.0 * math.sqrt(q.se_13 ** 2 + q.se_prod ** 2),
                     time.time() - t0, detail=f"lower ratio {q.lower_ratio:.3f}")
    t0 = time.time()
    q2 = quasi_mult_check(4.0, 16.0, 64.0, trials=40_000, seed=10)
    ratio = q.lower_ratio / q2.lower_ratio
    r2 = CheckResult("perc.quasi_mult.scale_stability", "perc", ratio, 1.0, 1.0,
                     0.5 < ratio < 2.0, time.time() - t0)
    return [r1, r2]


def check_energy_bounded() -> list[CheckResult]:
    t0 = time.time()
    trials = {64: 60_000, 128: 30_000, 256: 15_000}
    vals = []
    for n in (64, 128, 256):
        alpha1 = one_arm_alpha(float(n), trials[n], seed=777 + n)
        es = []
        for s in range(4):
            lam = area_measure(sample_config(n, "disk", seed=6000 + s),
                               AnnulusSpec(n / 2, float(n)), alpha1)
            es.append(energy_estimate(lam, 91 / 48, 0.1))
        vals.append(np.mean(es))
    vals = np.array(vals)
    ratio = vals.max() / vals.min()
    return [CheckResult("perc.energy.bounded", "perc", float(ratio), 1.0, 3.0, ratio < 3.0,
                        time.time() - t0, detail=f"energies {np.round(vals, 4).tolist()}")]


def check_p0_bounded() -> list[CheckResult]:
    t0 = time.time()
    vals = {}
    for n in (64, 128):
        eps = n // 16
        alpha4 = four_arm_alpha(float(n // 2), 40_000, seed=60 + n)
        tot = 0.0
        reps = 60
        for s in range(reps):
            c = sample_config(n, "disk", seed=8000 + s)
            pi = pseudo_interface(c)
            p0 = pi.p0_in_annulus(n / 4, n / 2)
            if p0.shape[0] == 0:
                continue
            atoms = {(int(x), int(y)) for x, y in four_arm_sites(c, eps)}
            cnt = sum(1 for x, y in p0 if (int(x), int(y)) in atoms)
            tot += cnt * (1.0 / n) ** 2 / alpha4
        vals[n] = tot / reps
    ratio = vals[128] / vals[64]
    return [CheckResult("perc.p0_measure.non_growing", "perc", float(ratio), 1.0, 0.3,
                        ratio < 1.3, time.time() - t0,
                        detail=f"E[mu(P0)] n64={vals[64]:.4f} n128={vals[128]:.4f}")]


FAST_CHECKS = [
    check_dimensions_exact,
    check_kpz_grids,
    check_levy_exact,
    check_gmc_exact,
    lambda: check_flip_oracle(full_enumeration=False),
    check_determinism,
]

FULL_CHECKS = FAST_CHECKS[:-2] + [
    lambda: check_flip_oracle(full_enumeration=True),
    check_determinism,
    check_laplace_round_trip,
    check_scaling_ks,
    check_first_passage_tail,
    check_bessel_dimensions,
    check_girsanov_battery,
    check_coordinate_change,
    check_circle_average_variance,
    check_gmc_mass_stability,
    check_one_arm_slope,
    check_four_arm_slope,
    check_pivotal_scaling,
    check_area_scaling,
    check_area_stability,
    check_quasi_mult,
    check_energy_bounded,
    check_p0_bounded,
]


def regression_suite(level: str = "fast") -> list[CheckResult]:
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    RAW_TABLES.clear()
    checks = FAST_CHECKS if level == "fast" else FULL_CHECKS
    results: list[CheckResult] = []
    for fn in checks:
        results.extend(fn())
    return results


def format_report(results: list[CheckResult]) -> str:
    lines = [r.line() for r in results]
    n_pass = sum(r.passed for r in results)
    lines.append(f"{n_pass}/{len(results)} checks passed")
    return "\n".join(lines)
