"""GFF sampling, circle averages, chaos measures, Girsanov and coordinate
change, wedge profiles.

The Green-function oracle is an independent sparse solve of the discrete
Laplace system; measure contracts (gamma=0, constant shift) are exact.
"""

import math

import numpy as np
import pytest
import scipy.sparse as sp
import scipy.sparse.linalg as spl

from natmeas.gmc import (
    ConditioningFailedError,
    DiskExitsDomainError,
    GridField,
    boundary_measure,
    circle_average,
    coordinate_change_check,
    girsanov_check,
    gmc_measure,
    mollified_variance,
    sample_gff,
    thin_wedge_bead_lengths,
    wedge_radial,
)
from natmeas.params import ParameterRangeError, SleParams


def direct_green_diagonal(n, i, j):
    """2*pi*(L^{-1})_{pp} from an explicit sparse solve (independent oracle)."""
    m = n - 2
    ident = sp.identity(m)
    t = sp.diags([-1, 2, -1], [-1, 0, 1], shape=(m, m))
    lap = (sp.kron(t, ident) + sp.kron(ident, t)).tocsc()
    p = (i - 1) * m + (j - 1)
    e = np.zeros(m * m)
    e[p] = 1.0
    return spl.spsolve(lap, 2.0 * np.pi * e)[p]


class TestGff:
    def test_minimum_size(self):
        with pytest.raises(ParameterRangeError):
            sample_gff(4)

    def test_boundary_exactly_zero(self):
        f = sample_gff(32, seed=1)
        assert np.all(f.values[0] == 0) and np.all(f.values[-1] == 0)
        assert np.all(f.values[:, 0] == 0) and np.all(f.values[:, -1] == 0)

    def test_deterministic_per_seed(self):
        assert np.array_equal(sample_gff(32, seed=9).values, sample_gff(32, seed=9).values)

    def test_center_mean_and_variance_match_green(self):
        n = 64
        c = n // 2
        samples = np.array([sample_gff(n, seed=s).values[c, c] for s in range(4000)])
        g_cc = direct_green_diagonal(n, c, c)
        assert abs(samples.mean()) < 3.0 * samples.std() / math.sqrt(samples.size)
        var = samples.var()
        var_se = var * math.sqrt(2.0 / samples.size)
        assert abs(var - g_cc) < 3.0 * var_se

    def test_mirror_covariance_symmetry(self):
        n = 32
        vals = np.array([[sample_gff(n, seed=s).values[12, 8],
                          sample_gff(n, seed=s).values[12, n - 1 - 8]] for s in range(3000)])
        x, y = vals[:, 0], vals[:, 1]
        # C(x, y) equals C(mirror x, mirror y) by lattice symmetry
        c1 = np.mean(x * x) - np.mean(x) ** 2
        c2 = np.mean(y * y) - np.mean(y) ** 2
        se = np.std(x * x) / math.sqrt(x.size) + np.std(y * y) / math.sqrt(y.size)
        assert abs(c1 - c2) < 3.0 * se


class TestCircleAverage:
    def test_zero_field(self):
        f = GridField(64, np.zeros((64, 64)), 0)
        assert circle_average(f, (0.5, 0.5), 0.1) == 0.0

    def test_disk_must_fit(self):
        f = sample_gff(64, seed=0)
        with pytest.raises(DiskExitsDomainError):
            circle_average(f, (0.05, 0.5), 0.2)

    def test_log_variance_growth(self):
        n = 128
        eps = np.array([4, 6, 8, 12, 16, 24, 32]) / (n - 1)
        v = np.array([mollified_variance(n, (0.5, 0.5), e) for e in eps])
        x = np.log(1.0 / eps)
        design = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(design, v, rcond=None)
        pred = design @ coef
        r2 = 1.0 - np.sum((v - pred) ** 2) / np.sum((v - v.mean()) ** 2)
        assert 0.9 <= coef[0] <= 1.1
        assert r2 > 0.95

    def test_halving_eps_adds_log_two(self):
        n = 128
        v1 = mollified_variance(n, (0.5, 0.5), 16 / (n - 1))
        v2 = mollified_variance(n, (0.5, 0.5), 8 / (n - 1))
        assert abs((v2 - v1) - math.log(2.0)) < 0.05


class TestGmcMeasure:
    def test_gamma_zero_is_area_exactly(self):
        n = 128
        f = sample_gff(n, seed=1)
        m = gmc_measure(f, 0.0, 8 / (n - 1))
        area = f.spacing ** 2
        assert np.all(m.masses[m.valid] == area)
        assert np.all(m.masses[~m.valid] == 0.0)

    def test_gamma_range(self):
        f = sample_gff(32, seed=0)
        with pytest.raises(ParameterRangeError):
            gmc_measure(f, 2.0, 0.1)

    def test_constant_shift_multiplies_masses(self):
        n = 128
        c, g = 0.3, 0.5
        f = sample_gff(n, seed=2)
        shifted = GridField(n, f.values + c, f.seed)
        m1 = gmc_measure(f, g, 8 / (n - 1))
        m2 = gmc_measure(shifted, g, 8 / (n - 1))
        ratio = m2.masses[m2.valid] / m1.masses[m1.valid]
        assert np.allclose(ratio, math.exp(g * c), rtol=1e-12)

    def test_expected_mass_stable_across_eps(self):
        # martingale normalization: E[mass(S)] ~ area(S) for every eps
        n = 256
        s_box = (0.375, 0.625)
        means = []
        for eps_cells in (4, 8, 16):
            eps = eps_cells / (n - 1)
            tot = sum(gmc_measure(sample_gff(n, seed=100 + s), 0.5, eps)
                      .box_mass(*s_box, *s_box) for s in range(60))
            means.append(tot / 60)
        mm = np.array(means)
        assert (mm.max() - mm.min()) / mm.mean() < 0.05
        assert abs(mm.mean() - 0.25 ** 2) / 0.25 ** 2 < 0.08


class TestBoundaryMeasure:
    def test_gamma_zero_is_lebesgue(self):
        n = 128
        f = sample_gff(n, seed=3)
        b = boundary_measure(f, 0.0, 8 / (n - 1))
        assert np.all(b.masses == f.spacing)

    def test_constant_shift_scales_by_half_exponent(self):
        n = 128
        f = sample_gff(n, seed=4)
        c, g = 0.4, 0.5
        b1 = boundary_measure(f, g, 8 / (n - 1))
        b2 = boundary_measure(GridField(n, f.values + c, f.seed), g, 8 / (n - 1))
        assert np.allclose(b2.masses / b1.masses, math.exp(g * c / 2.0), rtol=1e-10)

    def test_expected_mass_stable_across_eps(self):
        n = 256
        means = []
        for eps_cells in (6, 12):
            eps = eps_cells / (n - 1)
            tot = 0.0
            for s in range(40):
                b = boundary_measure(sample_gff(n, seed=600 + s), 0.5, eps)
                sel = (b.positions >= 0.3) & (b.positions < 0.7)
                tot += b.masses[sel].sum()
            means.append(tot / 40)
        spread = abs(means[0] - means[1]) / np.mean(means)
        assert spread < 0.07
        assert abs(np.mean(means) - 0.4) / 0.4 < 0.07


def _battery():
    def box_mean(v):
        return math.tanh(v[20:40, 20:40].mean())

    def point_clip(v):
        return float(np.clip(v[32, 16], -3, 3))

    def sin_avg(v):
        return math.sin(v[10:54, 10:54].mean())

    def indicator(v):
        return 1.0 if v[30:34, 30:34].mean() > 0 else 0.0

    def absavg(v):
        return math.tanh(abs(v[16:48, 40:60].mean()))

    return [box_mean, point_clip, sin_avg, indicator, absavg]


class TestGirsanov:
    def test_unit_statistic_exact(self):
        r = girsanov_check(64, 0.5, (0.4, 0.55), lambda v: 1.0, 400, 0.06, seed=7)
        assert r.tilted_estimate == 1.0 and r.shifted_estimate == 1.0

    def test_gamma_zero_exact(self):
        stat = _battery()[0]
        r = girsanov_check(64, 0.0, (0.4, 0.55), stat, 400, 0.06, seed=8)
        assert r.tilted_estimate == r.shifted_estimate

    @pytest.mark.parametrize("gamma", [0.25, 0.5, 1.0])
    def test_battery_zscores(self, gamma):
        for i, stat in enumerate(_battery()):
            r = girsanov_check(64, gamma, (0.4, 0.55), stat, 4000, 0.06, seed=1000 * i)
            assert abs(r.zscore) < 3.0, f"statistic {i} z={r.zscore}"


class TestCoordinateChange:
    def test_identity_map(self):
        n = 257
        assert coordinate_change_check(n, 1.0, 0.5, 8 / (n - 1), n_seeds=3).discrepancy == 0.0

    def test_gamma_zero_pure_area(self):
        n = 257
        r = coordinate_change_check(n, 0.5, 0.0, 8 / (n - 1), n_seeds=2)
        assert r.discrepancy == 0.0
        assert r.mass_domain == pytest.approx(0.25, abs=1e-12)

    def test_half_scaling_at_half_gamma(self):
        n = 257
        r = coordinate_change_check(n, 0.5, 0.5, 8 / (n - 1), n_seeds=200, seed=0)
        assert r.discrepancy < 0.10

    def test_doubling_direction(self):
        n = 257
        r = coordinate_change_check(n, 2.0, 0.5, 4 / (n - 1), n_seeds=200, seed=3)
        assert r.discrepancy < 0.10

    def test_gamma_one(self):
        n = 257
        r = coordinate_change_check(n, 0.5, 1.0, 8 / (n - 1), n_seeds=800, seed=5)
        assert r.discrepancy < 0.10

    def test_non_dyadic_rejected(self):
        with pytest.raises(ParameterRangeError):
            coordinate_change_check(65, 0.3, 0.5, 0.05)


class TestWedge:
    def test_thin_regime_routed(self):
        p = SleParams(3.0)
        with pytest.raises(ParameterRangeError):
            wedge_radial(p.q_coeff + 0.1, p, horizon=1.0)

    def test_conditioned_branch_positive(self):
        p = SleParams(2.0)
        prof = wedge_radial(0.7, p, horizon=4.0, seed=3)
        neg = prof.s_grid < 0
        # hat(B)_{2t} + (Q - alpha) t > 0 translates to A_s + Q|s| > 0 on s<0
        assert np.all(prof.a_values[neg] + p.q_coeff * (-prof.s_grid[neg]) > 0)

    def test_driftless_branch_centered(self):
        p = SleParams(2.0)
        vals = []
        for s in range(400):
            pr = wedge_radial(0.0, p, horizon=3.0, seed=100 + s)
            vals.append(pr.a_values[pr.s_grid > 0])
        v = np.array(vals)
        se = v.std(axis=0) / math.sqrt(v.shape[0])
        assert np.all(np.abs(v.mean(axis=0)) < 4.0 * se + 1e-12)

    def test_drift_slope_matches_alpha(self):
        p = SleParams(2.0)
        alpha = p.gamma
        vals = []
        for s in range(800):
            pr = wedge_radial(alpha, p, horizon=3.0, seed=2000 + s)
            vals.append(pr.a_values[pr.s_grid > 0])
        mean_curve = np.array(vals).mean(axis=0)
        sgrid = pr.s_grid[pr.s_grid > 0]
        slope = np.polyfit(sgrid, mean_curve, 1)[0]
        assert abs(slope - alpha) / alpha < 0.05

    def test_rejection_rate_monotone_in_alpha(self):
        p = SleParams(3.0)
        attempts = []
        for alpha in (0.0, 0.8, 1.6):
            a = [wedge_radial(alpha, p, horizon=3.0, seed=5000 + s).attempts
                 for s in range(200)]
            attempts.append(np.mean(a))
        assert attempts[0] < attempts[1] < attempts[2]

    def test_thin_beads_range_check(self):
        p = SleParams(3.0)
        with pytest.raises(ParameterRangeError):
            thin_wedge_bead_lengths(p.q_coeff - 0.1, p)
        lengths = thin_wedge_bead_lengths(p.q_coeff + 0.4, p, local_time=2.0, seed=9)
        assert lengths.size > 100 and np.all(lengths > 0)
        assert np.all(np.diff(lengths) <= 0)

    def test_thin_beads_tail_index(self):
        # bead lengths are jumps of a stable subordinator of index
        # 1/2 + (alpha - Q)/gamma; the empirical jump tail has that exponent
        p = SleParams(3.0)
        alpha = p.q_coeff + 0.4
        index = 0.5 + (alpha - p.q_coeff) / p.gamma
        lengths = np.concatenate([
            thin_wedge_bead_lengths(alpha, p, local_time=50.0, seed=s) for s in range(10)])
        grid = np.geomspace(1e-3, 0.3, 10)
        surv = np.array([(lengths > g).sum() for g in grid], dtype=float)
        slope = np.polyfit(np.log(grid), np.log(surv), 1)[0]
        assert abs(-slope - index) < 0.08
