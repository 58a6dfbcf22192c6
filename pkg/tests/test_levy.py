"""Subordinator, occupation-measure, Bessel zero-set and first-passage tests.

Statistical checks run at fixed seeds; tolerances follow the acceptance
contract (Laplace round-trip +/-0.05, KS at the 1% critical value, zero-set
dimension +/-0.07, tail slope +/-0.15).
"""

import numpy as np
import pytest

from natmeas.levy import (
    bessel_zero_dimension,
    bessel_zero_set,
    first_passage_sizebias,
    fit_tail_slope,
    ks_two_sample,
    laplace_fit,
    occupation_measure,
    sample_subordinator,
    sample_tau_batch,
    sizebias_resample,
)
from natmeas.params import ParameterRangeError

LAMBDAS = np.geomspace(0.1, 3.0, 100)
CUTOFF = {0.3: 1e-8, 0.5: 1e-7, 0.7: 1e-6, 0.75: 1e-6, 0.9: 1e-5}


class TestSampler:
    def test_beta_one_deterministic(self):
        p = sample_subordinator(1.0, 2.0, 3.0, seed=0)
        assert p.evaluate(3.0) == 6.0
        assert p.jump_times.size == 0

    def test_path_monotone_and_zero_start(self):
        p = sample_subordinator(0.5, 1.0, 4.0, cutoff=1e-7, seed=2)
        t = np.linspace(0.0, 4.0, 2000)
        v = p.evaluate(t)
        assert p.evaluate(0.0) == 0.0
        assert np.all(np.diff(v) >= 0.0)

    def test_right_continuity_at_jumps(self):
        p = sample_subordinator(0.5, 1.0, 1.0, cutoff=1e-3, seed=3)
        big = p.jump_times[p.jump_sizes > 0.01][:5]
        for tj in big:
            after = p.evaluate(tj)
            before = p.evaluate(np.nextafter(tj, 0.0))
            assert after > before  # jump included at its own time

    def test_jump_sizes_respect_cutoff(self):
        p = sample_subordinator(0.7, 1.0, 1.0, cutoff=1e-4, seed=4)
        assert np.all(p.jump_sizes >= 1e-4)

    def test_beta_out_of_range(self):
        with pytest.raises(ParameterRangeError):
            sample_subordinator(1.2, 1.0, 1.0)
        with pytest.raises(ParameterRangeError):
            sample_subordinator(0.0, 1.0, 1.0)

    def test_half_stable_laplace_point(self):
        # E exp(-tau_1) = exp(-c) at lambda=1 for any beta; spot-check beta=1/2
        tau = sample_tau_batch(0.5, 1.0, 1.0, 30_000, cutoff=1e-7, seed=3)
        vals = np.exp(-tau)
        se = vals.std() / np.sqrt(vals.size)
        assert abs(vals.mean() - np.exp(-1.0)) < 3.0 * se

    def test_scaling_ks_beta_07(self):
        t1 = sample_tau_batch(0.7, 1.0, 1.0, 10_000, cutoff=1e-6, seed=5)
        t4 = sample_tau_batch(0.7, 1.0, 4.0, 10_000, cutoff=1e-6, seed=6)
        d, crit = ks_two_sample(t4, 4.0 ** (1 / 0.7) * t1)
        assert d < crit

    def test_independent_increments(self):
        vals1, vals2 = [], []
        for s in range(2000):
            p = sample_subordinator(0.5, 1.0, 2.0, cutoff=1e-5, seed=900_000 + s)
            vals1.append(p.evaluate(1.0))
            vals2.append(p.evaluate(2.0) - p.evaluate(1.0))
        x = np.log1p(np.array(vals1))
        y = np.log1p(np.array(vals2))
        r = np.corrcoef(x, y)[0, 1]
        assert abs(r) < 3.0 / np.sqrt(len(vals1))


class TestLaplaceFit:
    @pytest.mark.parametrize("beta", [0.3, 0.5, 0.7, 0.9])
    def test_round_trip(self, beta):
        tau = sample_tau_batch(beta, 1.0, 1.0, 10_000, cutoff=CUTOFF[beta], seed=42)
        fit = laplace_fit(tau, LAMBDAS)
        assert abs(fit.beta_hat - beta) < 0.05

    def test_beta_one_exact(self):
        fit = laplace_fit(sample_tau_batch(1.0, 2.0, 1.0, 1000, seed=1), LAMBDAS)
        assert abs(fit.beta_hat - 1.0) < 1e-6
        assert abs(fit.c_hat - 2.0) < 1e-6

    def test_c_round_trip(self):
        tau = sample_tau_batch(0.75, 2.0, 1.0, 10_000, cutoff=CUTOFF[0.75], seed=7)
        fit = laplace_fit(tau, LAMBDAS)
        assert 1.8 < fit.c_hat < 2.2

    def test_accepts_path_objects(self):
        paths = [sample_subordinator(1.0, 1.5, 1.0, seed=s) for s in range(4)]
        fit = laplace_fit(paths, np.geomspace(0.5, 2.0, 10))
        assert abs(fit.beta_hat - 1.0) < 1e-9

    def test_degenerate_grid(self):
        with pytest.raises(ValueError):
            laplace_fit(np.ones(10), np.array([1.0]))
        with pytest.raises(ValueError):
            laplace_fit(np.ones(10), np.array([2.0, 2.0, 2.0]))


class TestOccupationMeasure:
    def test_identity_subordinator(self):
        p = sample_subordinator(1.0, 1.0, 3.0, seed=0)
        m = occupation_measure(p)
        xs = np.array([0.0, 0.5, 1.7, 3.0])
        assert np.allclose(m.cdf(xs), xs, atol=0.0)

    def test_total_mass_exact(self):
        for s in range(5):
            p = sample_subordinator(0.5, 1.0, 4.0, cutoff=1e-6, seed=s)
            m = occupation_measure(p)
            assert m.cdf(p.evaluate(4.0)) == 4.0
            assert m.total_mass() == 4.0

    def test_cdf_monotone(self):
        p = sample_subordinator(0.6, 1.0, 2.0, cutoff=1e-5, seed=9)
        m = occupation_measure(p)
        xs = np.linspace(0.0, p.evaluate(2.0) * 1.1, 500)
        assert np.all(np.diff(m.cdf(xs)) >= -1e-15)

    def test_moments_stabilize(self):
        # E[m[0,1]^p] finite for p in {1,2,4}: empirical moments at n and 3n
        # agree within a factor bracket
        def moments(n, seed0):
            vals = []
            for s in range(n):
                p = sample_subordinator(0.5, 1.0, 8.0, cutoff=1e-5, seed=seed0 + s)
                assert p.evaluate(8.0) > 1.0
                vals.append(occupation_measure(p).cdf(1.0))
            v = np.array(vals)
            return np.array([np.mean(v ** q) for q in (1, 2, 4)])

        small = moments(800, 10_000)
        large = moments(2400, 50_000)
        ratio = large / small
        assert np.all(ratio > 0.5) and np.all(ratio < 2.0)

    def test_requested_horizon_beyond_path(self):
        p = sample_subordinator(0.5, 1.0, 1.0, cutoff=1e-5, seed=1)
        with pytest.raises(ValueError):
            occupation_measure(p, horizon=2.0)


class TestBesselZeroSet:
    def test_rejects_degenerate_dimension(self):
        with pytest.raises(ParameterRangeError):
            bessel_zero_set(2.0, 1e-4, 1.0)
        with pytest.raises(ParameterRangeError):
            bessel_zero_set(0.0, 1e-4, 1.0)

    def test_brownian_zero_set(self):
        est = bessel_zero_dimension(1.0, 2e-6, 2.0, n_seeds=12, seed=0)
        assert 0.45 <= est <= 0.55

    def test_weight_one_kappa_three_case(self):
        # dim = 4W/gamma^2 = 4/3 at W=rho+2, rho=-1, kappa=3; index 1/3
        est = bessel_zero_dimension(4 / 3, 2e-6, 2.0, n_seeds=12, seed=1)
        assert abs(est - 1 / 3) <= 0.07

    def test_zero_measure_vanishes_toward_dim_two(self):
        # flagged-step count decreases monotonically over a dim grid
        counts = []
        for dim in (0.5, 1.0, 1.5, 1.9):
            z = bessel_zero_set(dim, 1e-4, 1.0, seed=3)
            counts.append(z.intervals.shape[0] and z.counts[0])
        assert counts[0] > counts[-1]
        assert sorted(counts, reverse=True) == counts

    def test_intervals_lie_in_horizon(self):
        z = bessel_zero_set(1.0, 1e-4, 1.0, seed=4)
        assert np.all(z.intervals >= 0.0) and np.all(z.intervals <= 1.0)


class TestBoxCountOracle:
    def test_exact_subordinator_range(self):
        # methodology oracle: the range of a q-stable subordinator (sampled
        # exactly via its Poisson jumps, no diffusion discretization) has box
        # dimension q; the same dyadic counting used for Bessel zero sets
        # must recover it
        q = 0.5
        n_grid = 1 << 20
        v_max = 1.0
        counts = None
        for s in range(10):
            p = sample_subordinator(q, 1.0, 40.0, cutoff=1e-9, seed=s, compensate=False)
            starts = np.concatenate(([0.0], np.cumsum(p.jump_sizes)))[:-1]
            ends = starts + p.jump_sizes
            dt_v = v_max / n_grid
            flags = np.ones(n_grid, bool)
            for a, b in zip(starts, ends):
                if a >= v_max:
                    break
                i0, i1 = int(np.ceil(a / dt_v)), int(np.floor(b / dt_v))
                if i1 > i0:
                    flags[i0:i1] = False
            sc, ct = [], []
            j = 0
            while (1 << j) <= n_grid // 64:
                blk = 1 << j
                m = (n_grid // blk) * blk
                ct.append(flags[:m].reshape(-1, blk).any(axis=1).sum())
                sc.append(blk * dt_v)
                j += 1
            counts = np.array(ct, float) if counts is None else counts + np.array(ct, float)
        sc = np.array(sc)
        good = (counts >= 50) & (sc >= sc[0] * 8) & (sc <= 1 / 16)
        slope = np.polyfit(np.log(sc[good]), np.log(counts[good]), 1)[0]
        assert abs(-slope - q) < 0.05


class TestFirstPassage:
    def test_parameter_range(self):
        with pytest.raises(ParameterRangeError):
            first_passage_sizebias(1.0, 10)
        with pytest.raises(ParameterRangeError):
            first_passage_sizebias(2.0, 10)

    def test_duration_tilted_tail_slope(self):
        # beta' = 4/kappa' + 1/2 = 7/6 at kappa'=6; survival slope -(1+1/beta')
        bp = 7 / 6
        fp = first_passage_sizebias(bp, 20_000, seed=11, pool=100_000)
        slope = fit_tail_slope(fp.tau, 1.5, 20.0, weights=fp.tau ** fp.tilt_power)
        target = -(1.0 + 1.0 / bp)
        assert abs(slope - target) <= 0.15

    def test_raw_moment_stabilizes_below_index(self):
        # E[tau^p] finite only for p < 1/beta'; check p=1/2 at beta'=1.5
        fp1 = first_passage_sizebias(1.5, 10, seed=21, pool=8_000)
        fp2 = first_passage_sizebias(1.5, 10, seed=22, pool=24_000)
        m1 = np.mean(fp1.tau ** 0.5)
        m2 = np.mean(fp2.tau ** 0.5)
        assert 0.5 < m2 / m1 < 2.0

    def test_size_bias_increases_mean(self):
        fp = first_passage_sizebias(1.5, 5_000, seed=23, pool=20_000, tilt_power=1.0)
        raw_mean = fp.tau.mean()
        sb_mean = fp.samples.mean()
        se = fp.samples.std() / np.sqrt(fp.samples.size)
        assert sb_mean > raw_mean + 3.0 * se or sb_mean > 2.0 * raw_mean

    def test_resample_weights_direction(self):
        vals = np.array([1.0, 2.0, 4.0, 8.0] * 100)
        up = sizebias_resample(vals, 1.0, 4000, 1).mean()
        down = sizebias_resample(vals, -1.0, 4000, 1).mean()
        assert up > vals.mean() > down

    def test_censoring_is_rare(self):
        fp = first_passage_sizebias(7 / 6, 100, seed=31, pool=5_000)
        assert fp.censored.mean() < 0.01
