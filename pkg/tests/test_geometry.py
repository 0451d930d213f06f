"""Bregman generator and mirror-map tests."""

import numpy as np
import pytest

from poisgibbs.errors import DomainError, MirrorRangeError
from poisgibbs.geometry import (BURG, EUCLIDEAN, HALF_SQ, ITAKURA_SAITO, KL,
                                MirrorMap, bregman_div,
                                bregman_div_from_generator, mirror_grad,
                                mirror_grad_inverse, mirror_hess_diag)


class TestDivergences:
    def test_is_identity_of_indiscernibles(self):
        v = np.array([3.7, 0.2])
        assert bregman_div(ITAKURA_SAITO, v, v) == 0.0

    def test_is_example(self):
        # 2/1 - log 2 - 1
        expected = 2.0 - np.log(2.0) - 1.0
        assert bregman_div(ITAKURA_SAITO, [2.0], [1.0]) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.306853, abs=1e-6)

    def test_euclidean_example(self):
        assert bregman_div(EUCLIDEAN, [1.0, 2.0], [0.0, 0.0]) == pytest.approx(2.5)

    def test_kl_closed_form(self):
        x = np.array([1.0, 2.0])
        z = np.array([2.0, 1.0])
        expected = (1 * np.log(0.5) - 1 + 2) + (2 * np.log(2.0) - 2 + 1)
        assert bregman_div(KL, x, z) == pytest.approx(expected, rel=1e-12)

    def test_domain_violation(self):
        with pytest.raises(DomainError):
            bregman_div(ITAKURA_SAITO, [1.0, 0.0], [1.0, 1.0])
        with pytest.raises(DomainError):
            bregman_div(KL, [1.0], [-2.0])

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            bregman_div(EUCLIDEAN, [1.0, 2.0], [1.0])

    def test_matches_generator_assembly(self):
        # closed forms vs h(x) - h(z) - <grad h(z), x - z>
        rng = np.random.default_rng(0)
        for _ in range(200):
            x = rng.uniform(0.05, 5.0, size=6)
            z = rng.uniform(0.05, 5.0, size=6)
            for kind in (EUCLIDEAN, KL, ITAKURA_SAITO):
                a = bregman_div(kind, x, z)
                b = bregman_div_from_generator(kind, x, z)
                assert a == pytest.approx(b, abs=1e-10 * max(1.0, abs(a)))

    def test_nonnegative_and_zero_iff_equal(self):
        rng = np.random.default_rng(1)
        for _ in range(500):
            x = rng.uniform(0.05, 5.0, size=4)
            z = rng.uniform(0.05, 5.0, size=4)
            for kind in (EUCLIDEAN, KL, ITAKURA_SAITO):
                d = bregman_div(kind, x, z)
                assert d >= 0.0
                if np.max(np.abs(x - z)) > 1e-12:
                    assert d > 0.0
                assert bregman_div(kind, x, x) == 0.0


class TestMirrorMap:
    def test_burg_grad_values(self):
        burg = MirrorMap(BURG)
        np.testing.assert_allclose(mirror_grad(burg, [1.0, 2.0, 4.0]),
                                   [-1.0, -0.5, -0.25])
        np.testing.assert_allclose(mirror_grad(burg, np.ones(5)), -np.ones(5))

    def test_halfsq_identity_grad(self):
        half = MirrorMap(HALF_SQ)
        np.testing.assert_allclose(mirror_grad(half, [3.0, -2.0]), [3.0, -2.0])

    def test_burg_hess_values(self):
        burg = MirrorMap(BURG)
        assert mirror_hess_diag(burg, [2.0]) == pytest.approx(0.25)
        assert mirror_hess_diag(burg, [1.0]) == pytest.approx(1.0)
        np.testing.assert_allclose(mirror_hess_diag(burg, [10.0, 0.1]),
                                   [0.01, 100.0], rtol=1e-12)

    def test_grad_inverse_values(self):
        burg = MirrorMap(BURG)
        np.testing.assert_allclose(mirror_grad_inverse(burg, [-1.0, -0.5]),
                                   [1.0, 2.0])

    def test_grad_inverse_range_error_reports_index(self):
        burg = MirrorMap(BURG)
        with pytest.raises(MirrorRangeError) as err:
            mirror_grad_inverse(burg, [0.1, -1.0])
        assert 0 in err.value.indices

    def test_round_trip_battery(self):
        # grad_inverse(grad(z)) == z to 1e-12 relative on 1e4 random vectors
        rng = np.random.default_rng(2)
        burg = MirrorMap(BURG)
        z = rng.uniform(1e-3, 1e3, size=(10_000, 8))
        for row in z:
            back = mirror_grad_inverse(burg, mirror_grad(burg, row))
            assert np.max(np.abs(back - row) / row) < 1e-12

    def test_round_trip_other_maps(self):
        rng = np.random.default_rng(3)
        for kind in (HALF_SQ,):
            mm = MirrorMap(kind)
            z = rng.normal(size=64)
            np.testing.assert_allclose(mm.grad_inverse(mm.grad(z)), z, rtol=1e-12)
        mm = MirrorMap("negent")
        z = rng.uniform(0.01, 10.0, size=64)
        np.testing.assert_allclose(mm.grad_inverse(mm.grad(z)), z, rtol=1e-12)

    def test_self_concordance_identity(self):
        # the Hilbert-Schmidt norm of the Hessian-sqrt difference equals the
        # dual-coordinate distance for the Burg map: both are ||1/z - 1/z'||
        rng = np.random.default_rng(4)
        burg = MirrorMap(BURG)
        for _ in range(200):
            z = rng.uniform(0.05, 20.0, size=16)
            zp = rng.uniform(0.05, 20.0, size=16)
            hs = np.linalg.norm(np.sqrt(burg.hess_diag(z)) - np.sqrt(burg.hess_diag(zp)))
            dual = np.linalg.norm(burg.grad(z) - burg.grad(zp))
            assert hs == pytest.approx(dual, rel=1e-10)

    def test_underflow_guard(self):
        burg = MirrorMap(BURG)
        with pytest.raises(DomainError):
            burg.grad(np.array([1.0, 1e-310]))
