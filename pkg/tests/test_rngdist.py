"""Distribution-sampler tests: documented examples, moment oracles,
goodness of fit, and numba/numpy backend parity."""

import numpy as np
import pytest
from scipy import stats

from poisgibbs import backend
from poisgibbs.errors import ParameterDomainError
from poisgibbs.rngdist import (GammaParams, InvGammaParams, RandomStream,
                               draw_gamma, draw_gamma_vec, draw_invgamma,
                               draw_invgamma_vec, draw_multinomial,
                               draw_poisson_vec, draw_std_normal_vec)


class TestStreams:
    def test_same_seed_same_sequence(self):
        a = RandomStream(1234, 7)
        b = RandomStream(1234, 7)
        va = draw_std_normal_vec(a, 64)
        vb = draw_std_normal_vec(b, 64)
        assert (va == vb).all()

    def test_distinct_stream_ids_differ(self):
        va = draw_std_normal_vec(RandomStream(1234, 0), 64)
        vb = draw_std_normal_vec(RandomStream(1234, 1), 64)
        assert not np.allclose(va, vb)

    def test_sequential_draws_differ(self):
        s = RandomStream(5)
        assert not np.allclose(draw_std_normal_vec(s, 8), draw_std_normal_vec(s, 8))

    def test_substream_independent_of_consumption(self):
        s = RandomStream(5)
        sub_before = s.substream(3, 1).key
        draw_std_normal_vec(s, 8)
        assert s.substream(3, 1).key == sub_before

    def test_substream_correlation_low(self):
        # crude independence proxy between sibling substreams
        s = RandomStream(99)
        a = draw_std_normal_vec(s.substream(0), 100000)
        b = draw_std_normal_vec(s.substream(1), 100000)
        assert abs(np.corrcoef(a, b)[0, 1]) < 0.01


class TestGamma:
    def test_exponential_mean(self):
        g = draw_gamma_vec(RandomStream(0), np.full(10 ** 6, 1.0), np.ones(10 ** 6))
        assert abs(g.mean() - 1.0) < 0.01

    def test_shape3_rate2_moments(self):
        # analytic moments: mean = shape/rate, var = shape/rate^2
        n = 10 ** 6
        g = draw_gamma_vec(RandomStream(1), np.full(n, 3.0), np.full(n, 2.0))
        se_mean = np.sqrt(0.75 / n)
        # var estimator SE: var * sqrt((kurtosis_excess + 2) / n), kurt = 6/shape
        se_var = 0.75 * np.sqrt((6.0 / 3.0 + 2.0) / n)
        assert abs(g.mean() - 1.5) < 3 * se_mean
        assert abs(g.var() - 0.75) < 3 * se_var

    def test_invalid_shape_rejected(self):
        with pytest.raises(ParameterDomainError):
            draw_gamma(RandomStream(0), GammaParams(0.0, 1.0))
        with pytest.raises(ParameterDomainError):
            draw_gamma(RandomStream(0), GammaParams(2.0, -1.0))

    def test_small_shape_positive(self):
        g = draw_gamma_vec(RandomStream(2), np.full(10 ** 5, 0.3), np.ones(10 ** 5))
        assert (g > 0).all()
        assert abs(g.mean() - 0.3) < 3 * np.sqrt(0.3 / 10 ** 5)

    def test_gamma_ks_fit(self):
        g = draw_gamma_vec(RandomStream(3), np.full(10 ** 5, 3.7), np.full(10 ** 5, 2.2))
        p = stats.kstest(g, stats.gamma(a=3.7, scale=1 / 2.2).cdf).pvalue
        assert p > 0.001


class TestInvGamma:
    def test_mean_shape3_scale4(self):
        # mean = scale/(shape-1) = 2; var = scale^2/((shape-1)^2 (shape-2)) = 4
        n = 10 ** 6
        v = draw_invgamma_vec(RandomStream(4), np.full(n, 3.0), np.full(n, 4.0))
        assert abs(v.mean() - 2.0) < 3 * np.sqrt(4.0 / n)

    def test_splitting_limit_mean(self):
        # shape 2/rho, scale (x+z1)/rho at rho=0.01, x=1, z1=3:
        # mean = 400/199 = 2.01005...; var = 400^2/(199^2*198)
        n = 10 ** 5
        rho, x, z1 = 0.01, 1.0, 3.0
        v = draw_invgamma_vec(RandomStream(5), np.full(n, 2 / rho),
                              np.full(n, (x + z1) / rho))
        mean = (x + z1) / rho / (2 / rho - 1)
        var = ((x + z1) / rho) ** 2 / ((2 / rho - 1) ** 2 * (2 / rho - 2))
        assert abs(v.mean() - mean) < 3 * np.sqrt(var / n)
        assert abs(mean - 2.0101) < 5e-5

    def test_mean_undefined_still_positive(self):
        v = draw_invgamma_vec(RandomStream(6), np.ones(10 ** 4), np.ones(10 ** 4))
        assert (v > 0).all()

    def test_matches_reciprocal_gamma_ks(self):
        # distribution identity invgamma(a,b) == 1/gamma(a, rate=b),
        # two-sample KS on independent streams, 1% critical value
        n = 10 ** 5
        a, b = 2.5, 1.7
        v1 = draw_invgamma_vec(RandomStream(7, 0), np.full(n, a), np.full(n, b))
        v2 = 1.0 / draw_gamma_vec(RandomStream(7, 1), np.full(n, a), np.full(n, b))
        d = stats.ks_2samp(v1, v2).statistic
        crit = 1.628 * np.sqrt(2.0 / n)  # alpha = 0.01
        assert d < crit

    def test_pathwise_reciprocal_identity(self):
        one = draw_invgamma(RandomStream(8), InvGammaParams(3.0, 4.0))
        other = 1.0 / draw_gamma(RandomStream(8), GammaParams(3.0, 4.0))
        assert one == pytest.approx(other, rel=1e-15)


class TestMultinomial:
    def test_zero_total(self):
        out = draw_multinomial(RandomStream(0), 0, [0.3, 0.7])
        assert (out == 0).all()

    def test_large_total_frequencies(self):
        probs = np.array([0.2, 0.3, 0.5])
        total = 10 ** 6
        out = draw_multinomial(RandomStream(9), total, probs)
        assert out.sum() == total
        se = np.sqrt(probs * (1 - probs) * total)
        assert (np.abs(out - probs * total) < 3 * se).all()

    def test_degenerate_support(self):
        for seed in range(20):
            out = draw_multinomial(RandomStream(seed), 5, [1.0, 0.0])
            assert (out == np.array([5, 0])).all()

    def test_invalid_probs(self):
        with pytest.raises(ParameterDomainError):
            draw_multinomial(RandomStream(0), 3, [-0.1, 1.1])
        with pytest.raises(ParameterDomainError):
            draw_multinomial(RandomStream(0), 3, [0.0, 0.0])
        with pytest.raises(ParameterDomainError):
            draw_multinomial(RandomStream(0), 3, [0.4, 0.4])  # sums to 0.8

    def test_marginals_binomial_chisquare(self):
        # category marginals are Binomial(total, p_j)
        total, probs = 6, np.array([0.15, 0.35, 0.5])
        n = 10 ** 5
        stream = RandomStream(10)
        draws = np.array([draw_multinomial(stream, total, probs) for _ in range(n)])
        assert (draws.sum(axis=1) == total).all()
        for j, p in enumerate(probs):
            observed = np.bincount(draws[:, j], minlength=total + 1)
            expected = stats.binom(total, p).pmf(np.arange(total + 1)) * n
            keep = expected > 5
            chi2 = ((observed[keep] - expected[keep]) ** 2 / expected[keep]).sum()
            chi2 += expected[~keep].sum()  # lump the sparse tail
            pval = stats.chi2(df=keep.sum() - 1).sf(chi2)
            assert pval > 0.001, f"category {j} marginal off (p={pval})"


class TestNormal:
    def test_moments(self):
        v = draw_std_normal_vec(RandomStream(11), 10 ** 6)
        assert abs(v.mean()) < 0.005
        assert abs(v.var() - 1.0) < 0.01

    def test_normality_ks(self):
        v = draw_std_normal_vec(RandomStream(12), 10 ** 5)
        assert stats.kstest(v, stats.norm.cdf).pvalue > 0.001

    def test_single_value_finite(self):
        v = draw_std_normal_vec(RandomStream(13), 1)
        assert v.shape == (1,) and np.isfinite(v[0])

    def test_length_validation(self):
        with pytest.raises(ParameterDomainError):
            draw_std_normal_vec(RandomStream(0), 0)


class TestPoisson:
    def test_small_rate_fit(self):
        lam = 4.5
        v = draw_poisson_vec(RandomStream(14), np.full(10 ** 5, lam))
        assert abs(v.mean() - lam) < 3 * np.sqrt(lam / 10 ** 5)
        assert abs(v.var() - lam) < 0.15

    def test_large_rate_fit(self):
        lam = 400.0
        v = draw_poisson_vec(RandomStream(15), np.full(10 ** 5, lam))
        assert abs(v.mean() - lam) < 3 * np.sqrt(lam / 10 ** 5)
        assert abs(v.var() / lam - 1.0) < 0.02

    def test_zero_rate(self):
        assert (draw_poisson_vec(RandomStream(0), np.zeros(10)) == 0).all()


@pytest.mark.skipif(not backend.numba_available(), reason="numba not importable")
class TestBackendParity:
    """The two kernel paths read identical uniform streams; integer draws
    must match exactly and float draws to last-ulp libm differences."""

    def _both(self, fn):
        with backend.force_backend("numba"):
            a = fn(backend.kernels())
        with backend.force_backend("numpy"):
            b = fn(backend.kernels())
        return a, b

    def test_gamma_parity(self):
        shapes = np.concatenate([np.full(20000, 0.4), np.full(20000, 3.0),
                                 np.full(20000, 11000.0)])
        a, b = self._both(lambda k: k.gamma_vec(np.uint64(42), shapes))
        np.testing.assert_allclose(a, b, rtol=1e-10)

    def test_binomial_parity(self):
        from poisgibbs._rngcore import derive
        keys = np.uint64([derive(9, i) for i in range(60000)])
        ns = np.tile(np.array([0, 7, 50, 2000], dtype=np.int64), 15000)
        ps = np.tile(np.array([0.5, 0.02, 0.4, 0.87]), 15000)
        a, b = self._both(lambda k: k.binomial_vec(keys, ns, ps))
        assert (a == b).all()

    def test_poisson_parity(self):
        lams = np.tile(np.array([0.0, 0.3, 8.0, 45.0, 3000.0]), 10000)
        a, b = self._both(lambda k: k.poisson_vec(np.uint64(77), lams))
        assert (a == b).all()

    def test_multinomial_parity(self):
        w = np.array([0.05, 0.2, 0.0, 0.45, 0.3])
        a, b = self._both(lambda k: k.multinomial_one(np.uint64(31), 12345, w))
        assert (a == b).all() and a.sum() == 12345 and a[2] == 0
