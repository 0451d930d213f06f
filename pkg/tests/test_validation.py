"""Oracle tests: exact-augmentation enumeration and conditional
log-density cross-checks against the closed-form families."""

import numpy as np
import pytest
from scipy import stats

from poisgibbs.errors import ParameterDomainError
from poisgibbs.operators import ConvolutionOperator, identity_operator
from poisgibbs.priors import FlatPrior, SmoothedTVPrior
from poisgibbs.sampler import PoissonModel, potential_grad, potential_value
from poisgibbs.validation import (COUNTS_ROW, X_BLOCK, Z1_BLOCK, Z2_BLOCK,
                                  EnumerationCase, conditional_logdensity,
                                  enumerate_augmented_marginal, ks_distance,
                                  poisson_loglik, quadrature_posterior_cdf,
                                  run_enumeration_battery)


class TestPoissonLoglik:
    def test_hand_computed_pmf(self):
        # rate 2, count 2: log(4 e^-2 / 2) = log 2 - 2
        case = EnumerationCase(H=[[1.0]], x=[2.0], y=[2], alpha=1.0)
        assert poisson_loglik(case) == pytest.approx(np.log(2) - 2, abs=1e-12)
        assert poisson_loglik(case) == pytest.approx(-1.3069, abs=1e-4)

    def test_zero_count(self):
        case = EnumerationCase(H=[[1.5]], x=[2.0], y=[0], alpha=1.0)
        assert poisson_loglik(case) == pytest.approx(-3.0, abs=1e-12)

    def test_zero_rate_zero_count(self):
        case = EnumerationCase(H=[[0.0]], x=[2.0], y=[0], alpha=1.0)
        assert poisson_loglik(case) == 0.0

    def test_zero_rate_positive_count(self):
        case = EnumerationCase(H=[[0.0]], x=[2.0], y=[3], alpha=1.0)
        assert poisson_loglik(case) == -np.inf


class TestEnumeration:
    def test_two_column_partition(self):
        case = EnumerationCase(H=[[1.0, 1.0]], x=[1.0, 2.0], y=[3], alpha=1.0)
        expected = stats.poisson(3.0).logpmf(3)
        got = enumerate_augmented_marginal(case)
        assert got == pytest.approx(expected, rel=1e-13)

    def test_zero_count_single_term(self):
        case = EnumerationCase(H=[[0.7, 0.3]], x=[1.0, 2.0], y=[0], alpha=1.3)
        expected = -1.3 * (0.7 * 1.0 + 0.3 * 2.0)
        assert enumerate_augmented_marginal(case) == pytest.approx(expected, rel=1e-13)

    def test_matches_likelihood_two_rows(self):
        case = EnumerationCase(H=[[1.0, 0.5, 0.2], [0.0, 0.8, 1.1]],
                               x=[0.5, 1.5, 2.5], y=[4, 5], alpha=0.7)
        direct = poisson_loglik(case)
        summed = enumerate_augmented_marginal(case)
        assert summed == pytest.approx(direct, rel=1e-13)

    def test_battery(self):
        results = run_enumeration_battery(n_cases=30, seed=11)
        assert all(r["ok"] for r in results)

    def test_enumeration_bound_enforced(self):
        with pytest.raises(ParameterDomainError):
            EnumerationCase(H=np.ones((2, 3)), x=np.ones(3),
                            y=[5000, 5000], alpha=1.0)


def _frozen_state(rng, op, alpha=1.3, rho=0.37):
    n = op.n
    x = rng.uniform(0.3, 2.0, n)
    z1 = rng.uniform(0.3, 2.0, n)
    z2 = rng.uniform(0.3, 2.0, n)
    s = rng.integers(0, 9, n).astype(np.int64)
    y = rng.integers(0, 9, op.m).astype(np.int64)
    model = PoissonModel(y, alpha, op)
    return model, s, x, z1, z2, rho


class TestConditionalCrossChecks:
    def test_x_block_matches_gamma(self):
        rng = np.random.default_rng(0)
        op = ConvolutionOperator(np.array([[0.2, 0.5, 0.3]]) / 1.0, (1, 6))
        model, s, x, z1, z2, rho = _frozen_state(rng, op)
        shapes = s + 1.0 / rho + 1.0
        rates = model.alpha * op.col_sums() + 1.0 / (rho * z2)
        for _ in range(20):
            p1 = rng.uniform(0.2, 3.0, op.n)
            p2 = rng.uniform(0.2, 3.0, op.n)
            ours = (conditional_logdensity(X_BLOCK, model, s, x, z1, z2,
                                           FlatPrior(), rho, p1)
                    - conditional_logdensity(X_BLOCK, model, s, x, z1, z2,
                                             FlatPrior(), rho, p2))
            ref = (stats.gamma(a=shapes, scale=1 / rates).logpdf(p1).sum()
                   - stats.gamma(a=shapes, scale=1 / rates).logpdf(p2).sum())
            assert ours == pytest.approx(ref, abs=1e-10 * max(1, abs(ref)))

    def test_z2_block_matches_invgamma(self):
        rng = np.random.default_rng(1)
        op = identity_operator(5)
        model, s, x, z1, z2, rho = _frozen_state(rng, op)
        shape = 2.0 / rho
        scales = (x + z1) / rho
        for _ in range(20):
            p1 = rng.uniform(0.2, 3.0, 5)
            p2 = rng.uniform(0.2, 3.0, 5)
            ours = (conditional_logdensity(Z2_BLOCK, model, s, x, z1, z2,
                                           FlatPrior(), rho, p1)
                    - conditional_logdensity(Z2_BLOCK, model, s, x, z1, z2,
                                             FlatPrior(), rho, p2))
            ref = (stats.invgamma(a=shape, scale=scales).logpdf(p1).sum()
                   - stats.invgamma(a=shape, scale=scales).logpdf(p2).sum())
            assert ours == pytest.approx(ref, abs=1e-10 * max(1, abs(ref)))

    def test_z1_block_flat_prior_matches_gamma(self):
        rng = np.random.default_rng(2)
        op = identity_operator(4)
        model, s, x, z1, z2, rho = _frozen_state(rng, op)
        prior = FlatPrior()
        shape = 1.0 / rho
        rates = 1.0 / (rho * z2)
        for _ in range(20):
            p1 = rng.uniform(0.2, 3.0, 4)
            p2 = rng.uniform(0.2, 3.0, 4)
            ours = (conditional_logdensity(Z1_BLOCK, model, s, x, z1, z2,
                                           prior, rho, p1)
                    - conditional_logdensity(Z1_BLOCK, model, s, x, z1, z2,
                                             prior, rho, p2))
            ref = (stats.gamma(a=shape, scale=1 / rates).logpdf(p1).sum()
                   - stats.gamma(a=shape, scale=1 / rates).logpdf(p2).sum())
            assert ours == pytest.approx(ref, abs=1e-10 * max(1, abs(ref)))

    def test_counts_row_matches_multinomial(self):
        rng = np.random.default_rng(3)
        op = identity_operator(3)
        # a dense single-row operator exercises the full multinomial support
        from poisgibbs.operators import SparseOperator
        op = SparseOperator(1, 3, [0, 3], [0, 1, 2], [0.5, 1.0, 0.7])
        y = np.array([6], dtype=np.int64)
        model = PoissonModel(y, 1.1, op)
        x = rng.uniform(0.2, 2.0, 3)
        z = np.ones(3)
        probs = op.weights * x
        probs = probs / probs.sum()
        c1 = np.array([1, 2, 3])
        c2 = np.array([4, 0, 2])
        ours = (conditional_logdensity(COUNTS_ROW, model, None, x, z, z,
                                       FlatPrior(), 0.5, None, row_counts=c1)
                - conditional_logdensity(COUNTS_ROW, model, None, x, z, z,
                                         FlatPrior(), 0.5, None, row_counts=c2))
        ref = (stats.multinomial(6, probs).logpmf(c1)
               - stats.multinomial(6, probs).logpmf(c2))
        assert ours == pytest.approx(ref, abs=1e-10)

    def test_counts_row_coherence(self):
        op = identity_operator(2)
        model = PoissonModel(np.array([3, 1]), 1.0, op)
        val = conditional_logdensity(COUNTS_ROW, model, None, np.ones(2),
                                     np.ones(2), np.ones(2), FlatPrior(), 0.5,
                                     None, row_index=0, row_counts=np.array([2]))
        assert val == -np.inf  # count sum violates the observation


class TestPotentialGradient:
    def test_grad_matches_fd_of_conditional(self):
        # the mirror potential is the negated z1 conditional up to a constant
        rng = np.random.default_rng(4)
        op = identity_operator(16)
        model, s, x, z1, z2, rho = _frozen_state(rng, op)
        prior = SmoothedTVPrior(2.5, 0.02, (4, 4))
        for _ in range(10):
            p = rng.uniform(0.3, 2.0, 16)
            grad = potential_grad(p, z2, rho, prior)
            fd = np.empty(16)
            for j in range(16):
                h = 1e-6 * max(1.0, p[j])
                pp = p.copy(); pp[j] += h
                pm = p.copy(); pm[j] -= h
                fd[j] = -(conditional_logdensity(Z1_BLOCK, model, s, x, z1, z2,
                                                 prior, rho, pp)
                          - conditional_logdensity(Z1_BLOCK, model, s, x, z1, z2,
                                                   prior, rho, pm)) / (2 * h)
            scale = max(1.0, np.max(np.abs(grad)))
            assert np.max(np.abs(grad - fd)) < 1e-5 * scale

    def test_potential_value_consistent_with_conditional(self):
        # value differences equal negated conditional differences
        rng = np.random.default_rng(5)
        op = identity_operator(8)
        model, s, x, z1, z2, rho = _frozen_state(rng, op)
        prior = SmoothedTVPrior(1.5, 0.05, (2, 4))
        p1 = rng.uniform(0.3, 2.0, 8)
        p2 = rng.uniform(0.3, 2.0, 8)
        dv = potential_value(p1, z2, rho, prior) - potential_value(p2, z2, rho, prior)
        dc = (conditional_logdensity(Z1_BLOCK, model, s, x, z1, z2, prior, rho, p2)
              - conditional_logdensity(Z1_BLOCK, model, s, x, z1, z2, prior, rho, p1))
        assert dv == pytest.approx(dc, abs=1e-10 * max(1, abs(dv)))


class TestQuadrature:
    def test_gamma_posterior_cdf(self):
        # flat-prior posterior for y=7, alpha=1 is Gamma(8, 1)
        grid = np.linspace(0.0, 60.0, 60001)
        cdf = quadrature_posterior_cdf(7, 1.0, grid)
        ref = stats.gamma(a=8).cdf(grid)
        assert np.max(np.abs(cdf - ref)) < 1e-6

    def test_ks_distance_of_exact_samples(self):
        rng = np.random.default_rng(6)
        samples = rng.gamma(8.0, 1.0, size=20000)
        grid = np.linspace(0.0, 60.0, 60001)
        cdf = quadrature_posterior_cdf(7, 1.0, grid)
        d = ks_distance(samples, grid, cdf)
        assert d < 1.63 * np.sqrt(1.0 / 20000)  # 1% critical value
