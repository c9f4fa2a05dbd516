import numpy as np
import pytest
import scipy.stats

from kzchain import stats, theory


class TestEstimateCumulants:
    def test_constant_data(self):
        est = stats.estimate_cumulants([7] * 50, resamples=200, seed=1)
        assert est.kappa1 == 7.0
        assert est.kappa2 == 0.0
        assert est.kappa3 == 0.0
        for lo, hi in est.ci68.values():
            assert lo == hi

    def test_matches_scipy_kstats(self):
        rng = np.random.default_rng(2)
        x = rng.poisson(6.0, size=500)
        est = stats.estimate_cumulants(x, resamples=100, seed=0)
        assert est.kappa1 == pytest.approx(scipy.stats.kstat(x, 1), rel=1e-12)
        assert est.kappa2 == pytest.approx(scipy.stats.kstat(x, 2), rel=1e-12)
        assert est.kappa3 == pytest.approx(scipy.stats.kstat(x, 3), rel=1e-9)

    def test_poisson_identity(self):
        # all cumulants of a Poisson law equal its rate
        lam = 9.0
        x = np.random.default_rng(3).poisson(lam, size=100_000)
        est = stats.estimate_cumulants(x, resamples=400, seed=4)
        for name in ("kappa1", "kappa2", "kappa3"):
            lo, hi = est.ci68[name]
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            assert abs(mid - lam) < 4 * half + 1e-9, name

    def test_sampled_pair_distribution_matches_theory(self):
        q = theory.QuenchParams(L=400, tau=10.0)
        dist = theory.kink_distribution(q)
        rng = np.random.default_rng(5)
        x = rng.choice(dist.pmf.size, p=dist.pmf, size=60_000)
        est = stats.estimate_cumulants(x, resamples=400, seed=6)
        k1, k2, k3 = theory.kink_cumulants(q)
        for name, target in (("kappa1", k1), ("kappa2", k2), ("kappa3", k3)):
            lo, hi = est.ci68[name]
            mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
            assert abs(mid - target) < 4 * half, name

    def test_deterministic_given_seed(self):
        x = np.random.default_rng(0).poisson(4.0, size=200)
        a = stats.estimate_cumulants(x, resamples=300, seed=42)
        b = stats.estimate_cumulants(x, resamples=300, seed=42)
        assert a == b

    def test_ci_shrinks_like_root_n(self):
        rng = np.random.default_rng(8)
        big = rng.poisson(8.0, size=16_000)
        small = big[:4_000]
        est_s = stats.estimate_cumulants(small, resamples=600, seed=1)
        est_b = stats.estimate_cumulants(big, resamples=600, seed=2)
        w_s = est_s.ci68["kappa1"][1] - est_s.ci68["kappa1"][0]
        w_b = est_b.ci68["kappa1"][1] - est_b.ci68["kappa1"][0]
        assert 0.4 < w_b / w_s < 0.6

    def test_too_few_samples(self):
        with pytest.raises(ValueError):
            stats.estimate_cumulants([1, 2, 3], resamples=100)
        with pytest.raises(ValueError):
            stats.estimate_cumulants([1] * 20, resamples=50)


class TestRatios:
    def test_ratio_point_values(self):
        rng = np.random.default_rng(1)
        x = rng.poisson(16.0, size=4000)
        est = stats.estimate_cumulants(x, resamples=200, seed=0)
        ratios = stats.estimate_cumulant_ratios(x, resamples=200, seed=0)
        assert ratios["ratio21"]["value"] == pytest.approx(est.kappa2 / est.kappa1)
        assert ratios["ratio31"]["value"] == pytest.approx(est.kappa3 / est.kappa1)
        assert ratios["ratio21"]["stderr"] > 0


class TestFitPowerLaw:
    def test_exact_recovery(self):
        t = np.geomspace(1, 100, 12)
        fit = stats.fit_power_law([(ti, 3.0 * ti ** -0.5) for ti in t])
        assert fit.params["alpha"] == pytest.approx(0.5, abs=1e-12)
        assert fit.stderr["alpha"] == pytest.approx(0.0, abs=1e-10)

    def test_scale_equivariance(self):
        rng = np.random.default_rng(9)
        t = np.geomspace(1, 50, 10)
        y = 2.0 * t ** -0.62 * np.exp(rng.normal(0, 0.05, t.size))
        a = stats.fit_power_law(list(zip(t, y)))
        b = stats.fit_power_law(list(zip(t, 137.0 * y)))
        assert a.params["alpha"] == pytest.approx(b.params["alpha"], abs=1e-12)

    def test_range_filter(self):
        t = np.geomspace(1, 1000, 20)
        y = 3.0 * t ** -0.4
        y[t > 100] *= 0.1  # corrupt the tail
        fit = stats.fit_power_law(list(zip(t, y)), t_range=(1, 100))
        assert fit.params["alpha"] == pytest.approx(0.4, abs=1e-10)
        assert fit.range[1] <= 100

    def test_noisy_recovery_with_stderr(self):
        rng = np.random.default_rng(10)
        t = np.geomspace(1, 100, 33)
        y = 0.05 * t ** -0.204 * np.exp(rng.normal(0, 0.01, t.size))
        fit = stats.fit_power_law(list(zip(t, y)))
        assert abs(fit.params["alpha"] - 0.204) < 3 * fit.stderr["alpha"] + 1e-4

    def test_validation(self):
        with pytest.raises(ValueError):
            stats.fit_power_law([(1.0, 1.0), (2.0, 0.5)])
        with pytest.raises(ValueError):
            stats.fit_power_law([(1.0, 1.0), (2.0, -0.5), (3.0, 0.2)])
        with pytest.raises(ValueError):
            stats.fit_power_law([(0.0, 1.0), (2.0, 0.5), (3.0, 0.2)])


class TestFitConstant:
    def test_identical_values(self):
        fit = stats.fit_constant([(1.0, 0.6), (2.0, 0.6), (3.0, 0.6)])
        assert fit.params["constant"] == 0.6
        assert fit.stderr["constant"] == 0.0

    def test_weighted_mean(self):
        fit = stats.fit_constant([(1.0, 1.0, 1.0), (2.0, 3.0, 1.0)])
        assert fit.params["constant"] == pytest.approx(2.0)
        fit = stats.fit_constant([(1.0, 1.0, 0.5), (2.0, 3.0, 1.0)])
        assert fit.params["constant"] == pytest.approx((4.0 + 3.0) / 5.0)

    def test_synthetic_ratio_recovery(self):
        rng = np.random.default_rng(11)
        sigma = 0.02
        pts = [(t, 0.586 + rng.normal(0, sigma), sigma) for t in range(1, 30)]
        fit = stats.fit_constant(pts)
        assert abs(fit.params["constant"] - 0.586) < 2 * fit.stderr["constant"]

    def test_zero_sigma_conflict(self):
        with pytest.raises(ValueError):
            stats.fit_constant([(1.0, 0.5, 0.0), (2.0, 0.6, 0.0)])
        fit = stats.fit_constant([(1.0, 0.5, 0.0), (2.0, 0.5, 0.0)])
        assert fit.params["constant"] == 0.5


class TestHistogram:
    def test_point_mass(self):
        d = stats.histogram([4, 4, 4])
        assert np.allclose(d.pmf, [0, 0, 0, 0, 1.0])

    def test_uniform_flat(self):
        rng = np.random.default_rng(12)
        x = rng.integers(0, 10, size=200_000)
        d = stats.histogram(x)
        assert np.all(np.abs(d.pmf - 0.1) < 0.004)

    def test_empty(self):
        with pytest.raises(ValueError):
            stats.histogram([])


class TestDistances:
    def test_identical(self):
        p = [0.2, 0.3, 0.5]
        assert stats.tv_distance(p, p) == 0.0
        assert stats.kl_divergence(p, p) == 0.0

    def test_disjoint_support(self):
        assert stats.tv_distance([1.0, 0.0], [0.0, 1.0]) == 1.0

    def test_hand_computed(self):
        p, q = [0.75, 0.25], [0.25, 0.75]
        assert stats.tv_distance(p, q) == pytest.approx(0.5)
        assert stats.kl_divergence(p, q) == pytest.approx(0.5 * np.log(3.0))

    def test_kl_support_violation_names_n(self):
        with pytest.raises(ValueError, match="n=2"):
            stats.kl_divergence([0.5, 0.3, 0.2], [0.5, 0.5, 0.0])

    def test_mismatched_lengths_pad(self):
        assert stats.tv_distance([1.0], [0.5, 0.5]) == pytest.approx(0.5)

    def test_tv_metric_properties(self):
        rng = np.random.default_rng(13)
        for _ in range(50):
            def rand_pmf():
                v = rng.random(6)
                return v / v.sum()
            p, q, r = rand_pmf(), rand_pmf(), rand_pmf()
            assert stats.tv_distance(p, q) == pytest.approx(stats.tv_distance(q, p))
            assert stats.tv_distance(p, q) <= (stats.tv_distance(p, r)
                                               + stats.tv_distance(r, q) + 1e-12)
            assert stats.tv_distance(p, p) == 0.0

    def test_kl_nonnegative(self):
        rng = np.random.default_rng(14)
        for _ in range(50):
            p = rng.random(8) + 1e-3
            q = rng.random(8) + 1e-3
            p, q = p / p.sum(), q / q.sum()
            kl = stats.kl_divergence(p, q)
            assert kl >= -1e-12
        assert stats.kl_divergence(p, p) < 1e-12

    def test_accepts_kink_distribution(self):
        d = theory.pair_distribution([0.5, 0.5])
        assert stats.tv_distance(d, d.pmf) == 0.0


class TestDecayShape:
    def test_exact_power(self):
        t = np.linspace(5, 60, 10)
        fit = stats.fit_decay_shape([(ti, ti ** -2.0) for ti in t])
        assert fit.preferred == "power"
        assert fit.power.params["tau"] == pytest.approx(2.0, abs=1e-10)

    def test_exact_exponential(self):
        t = np.linspace(5, 60, 10)
        fit = stats.fit_decay_shape([(ti, np.exp(-0.3 * ti)) for ti in t])
        assert fit.preferred == "exponential"
        assert fit.exponential.params["gamma"] == pytest.approx(0.3, abs=1e-10)

    def test_noisy_returns_both(self):
        rng = np.random.default_rng(15)
        t = np.linspace(5, 60, 12)
        d = t ** -1.2 * np.exp(rng.normal(0, 0.3, t.size))
        fit = stats.fit_decay_shape(list(zip(t, d)))
        assert fit.power.residual > 0
        assert fit.exponential.residual > 0
        assert fit.preferred in ("power", "exponential")

    def test_validation(self):
        with pytest.raises(ValueError):
            stats.fit_decay_shape([(1.0, 0.5), (2.0, 0.4), (3.0, 0.3)])
        with pytest.raises(ValueError):
            stats.fit_decay_shape([(1.0, 0.5), (2.0, -0.4), (3.0, 0.3), (4.0, 0.2)])
