"""Random Fourier features: exact self inner products, unbiasedness, fusion.

Frozen oracles: at z = 0 every phase is zero, so the single map is
(1/sqrt(r)) (1, 0, 1, 0, ...). Self inner products are exactly 1 (single and
joint), C + 1 (fused shared), and C (fused missing) by the cos^2 + sin^2
identity, independent of the draw.
"""

import numpy as np
import pytest

from krossfuse.core import KernelSpec, kernel_eval
from krossfuse.rff import (
    FrequencySet,
    rff_joint,
    rff_joint_rows,
    rff_krossfuse_missing,
    rff_krossfuse_missing_rows,
    rff_krossfuse_shared,
    rff_krossfuse_shared_rows,
    rff_single,
    rff_single_rows,
    sample_freqs_rbf,
    sample_freqs_rbf_joint,
)


class TestSampling:
    def test_shapes(self):
        freqs = sample_freqs_rbf(3, 10, 2.0, seed=0)
        assert freqs.omega1.shape == (10, 3)
        assert freqs.r == 10
        assert freqs.omega2 is None

    def test_frequency_variance_matches_bandwidth(self):
        """Entries of omega are N(0, 2/B)."""
        B = 5.0
        freqs = sample_freqs_rbf(50, 400, B, seed=1)
        assert float(freqs.omega1.var()) == pytest.approx(2.0 / B, rel=0.05)

    def test_deterministic(self):
        a = sample_freqs_rbf(4, 8, 1.0, seed=3)
        b = sample_freqs_rbf(4, 8, 1.0, seed=3)
        np.testing.assert_array_equal(a.omega1, b.omega1)

    def test_joint_first_family_matches_single(self):
        """The joint draw's omega1 is bit-identical to the single draw's."""
        single = sample_freqs_rbf(4, 16, 2.0, seed=9)
        joint = sample_freqs_rbf_joint(4, 2.0, 6, 3.0, 16, seed=9)
        np.testing.assert_array_equal(joint.omega1, single.omega1)
        assert joint.omega2.shape == (16, 6)
        assert not np.array_equal(joint.omega1[:, :4], joint.omega2[:, :4])

    def test_validation(self):
        with pytest.raises(ValueError, match="r"):
            sample_freqs_rbf(2, 0, 1.0, seed=0)
        with pytest.raises(ValueError, match="bandwidth"):
            sample_freqs_rbf(2, 4, -1.0, seed=0)
        with pytest.raises(ValueError, match="omega2"):
            FrequencySet(np.ones((4, 2)), KernelSpec("rbf", 1.0), 0, np.ones((3, 2)))

    def test_frequencies_immutable(self):
        freqs = sample_freqs_rbf(2, 4, 1.0, seed=0)
        with pytest.raises(ValueError):
            freqs.omega1[0, 0] = 1.0


class TestSingleMap:
    def test_zero_input_oracle(self):
        """phi(0) = (1/sqrt(r)) (1, 0, 1, 0, ...)."""
        r = 5
        freqs = sample_freqs_rbf(3, r, 1.0, seed=0)
        z = rff_single(np.zeros(3), freqs)
        want = np.zeros(2 * r)
        want[0::2] = 1.0 / np.sqrt(r)
        np.testing.assert_allclose(z, want, rtol=0, atol=1e-15)

    def test_self_inner_exactly_one(self):
        """cos^2 + sin^2 makes the self inner product exactly 1 up to rounding."""
        g = np.random.default_rng(2)
        freqs = sample_freqs_rbf(4, 64, 2.0, seed=1)
        for _ in range(20):
            z = rff_single(g.standard_normal(4), freqs)
            assert abs(float(z @ z) - 1.0) <= 1e-12

    def test_unbiased_for_rbf(self):
        """Averaged across draws, <phi(x), phi(y)> matches exp(-||x-y||^2/B)
        within 4 standard errors."""
        g = np.random.default_rng(3)
        B = 3.0
        x, y = g.standard_normal((2, 4))
        want = kernel_eval(KernelSpec("rbf", B), x, y)
        trials, r = 500, 32
        vals = np.empty(trials)
        for t in range(trials):
            freqs = sample_freqs_rbf(4, r, B, seed=t)
            vals[t] = float(rff_single(x, freqs) @ rff_single(y, freqs))
        se = vals.std(ddof=1) / np.sqrt(trials)
        assert abs(vals.mean() - want) < 4.0 * se

    def test_rows_match_vector(self):
        """Batch rows agree with the per-vector map. Not asserted bitwise: the
        n x d and 1 x d matmuls may route to different BLAS kernels."""
        g = np.random.default_rng(4)
        X = g.standard_normal((6, 3))
        freqs = sample_freqs_rbf(3, 8, 1.5, seed=2)
        rows = rff_single_rows(X, freqs)
        for i in range(6):
            np.testing.assert_allclose(rows[i], rff_single(X[i], freqs), rtol=0, atol=1e-12)

    def test_dimension_mismatch(self):
        freqs = sample_freqs_rbf(3, 8, 1.0, seed=0)
        with pytest.raises(ValueError, match="dimension"):
            rff_single(np.zeros(4), freqs)


class TestJointMap:
    def test_self_inner_exactly_one(self):
        g = np.random.default_rng(5)
        freqs = sample_freqs_rbf_joint(3, 1.0, 5, 2.0, 64, seed=3)
        for _ in range(20):
            z = rff_joint(g.standard_normal(3), g.standard_normal(5), freqs)
            assert abs(float(z @ z) - 1.0) <= 1e-12

    def test_unbiased_for_kernel_product(self):
        """The joint map estimates k1(x1,y1) * k2(x2,y2) in one 2r-length map."""
        g = np.random.default_rng(6)
        B1, B2 = 2.0, 4.0
        x1, y1 = g.standard_normal((2, 3))
        x2, y2 = g.standard_normal((2, 5))
        want = kernel_eval(KernelSpec("rbf", B1), x1, y1) * kernel_eval(
            KernelSpec("rbf", B2), x2, y2
        )
        trials, r = 500, 32
        vals = np.empty(trials)
        for t in range(trials):
            freqs = sample_freqs_rbf_joint(3, B1, 5, B2, r, seed=t)
            vals[t] = float(rff_joint(x1, x2, freqs) @ rff_joint(y1, y2, freqs))
        se = vals.std(ddof=1) / np.sqrt(trials)
        assert abs(vals.mean() - want) < 4.0 * se

    def test_requires_joint_frequency_set(self):
        freqs = sample_freqs_rbf(3, 8, 1.0, seed=0)
        with pytest.raises(ValueError, match="omega2"):
            rff_joint(np.zeros(3), np.zeros(3), freqs)

    def test_row_count_mismatch(self):
        freqs = sample_freqs_rbf_joint(2, 1.0, 2, 1.0, 4, seed=0)
        with pytest.raises(ValueError, match="row"):
            rff_joint_rows(np.ones((2, 2)), np.ones((3, 2)), freqs)


class TestFusedMap:
    def test_output_length_is_4r(self):
        freqs = sample_freqs_rbf_joint(3, 1.0, 4, 2.0, 16, seed=0)
        z = rff_krossfuse_shared(np.zeros(3), np.zeros(4), 1.0, freqs)
        assert z.shape == (64,)

    def test_shared_self_inner_exactly_C_plus_one(self):
        g = np.random.default_rng(7)
        freqs = sample_freqs_rbf_joint(3, 1.0, 4, 2.0, 32, seed=1)
        for C in (0.1, 1.0, 10.0):
            for _ in range(10):
                z = rff_krossfuse_shared(g.standard_normal(3), g.standard_normal(4), C, freqs)
                assert abs(float(z @ z) - (C + 1.0)) <= 1e-12

    def test_missing_self_inner_exactly_C(self):
        g = np.random.default_rng(8)
        freqs = sample_freqs_rbf_joint(3, 1.0, 4, 2.0, 32, seed=1)
        for C in (0.1, 1.0, 10.0):
            for _ in range(10):
                z = rff_krossfuse_missing(g.standard_normal(3), C, freqs)
                assert abs(float(z @ z) - C) <= 1e-12

    def test_missing_joint_block_is_zero(self):
        freqs = sample_freqs_rbf_joint(3, 1.0, 4, 2.0, 8, seed=2)
        Z = rff_krossfuse_missing_rows(np.ones((2, 3)), 2.0, freqs)
        np.testing.assert_array_equal(Z[:, 16:], np.zeros((2, 16)))

    def test_shared_shared_unbiased(self):
        """E <z(x), z(y)> = k_cross * (C + k_uni) across draws."""
        g = np.random.default_rng(9)
        B1, B2, C = 2.0, 3.0, 1.5
        x1, y1 = g.standard_normal((2, 3))
        x2, y2 = g.standard_normal((2, 4))
        k1 = kernel_eval(KernelSpec("rbf", B1), x1, y1)
        k2 = kernel_eval(KernelSpec("rbf", B2), x2, y2)
        want = k1 * (C + k2)
        trials, r = 500, 32
        vals = np.empty(trials)
        for t in range(trials):
            freqs = sample_freqs_rbf_joint(3, B1, 4, B2, r, seed=t)
            zx = rff_krossfuse_shared(x1, x2, C, freqs)
            zy = rff_krossfuse_shared(y1, y2, C, freqs)
            vals[t] = float(zx @ zy)
        se = vals.std(ddof=1) / np.sqrt(trials)
        assert abs(vals.mean() - want) < 4.0 * se

    def test_shared_missing_unbiased(self):
        """E <z_shared(x), z_missing(y)> = C * k_cross."""
        g = np.random.default_rng(10)
        B1, B2, C = 2.0, 3.0, 2.0
        x1 = g.standard_normal(3)
        x2 = g.standard_normal(4)
        y1 = g.standard_normal(3)
        want = C * kernel_eval(KernelSpec("rbf", B1), x1, y1)
        trials, r = 500, 32
        vals = np.empty(trials)
        for t in range(trials):
            freqs = sample_freqs_rbf_joint(3, B1, 4, B2, r, seed=t)
            zs = rff_krossfuse_shared(x1, x2, C, freqs)
            zm = rff_krossfuse_missing(y1, C, freqs)
            vals[t] = float(zs @ zm)
        se = vals.std(ddof=1) / np.sqrt(trials)
        assert abs(vals.mean() - want) < 4.0 * se

    def test_missing_missing_inner_is_deterministic(self):
        """Missing-missing inner products carry no joint randomness beyond the
        single map: <z_m(x), z_m(y)> = C <phi(x), phi(y)> exactly."""
        g = np.random.default_rng(11)
        freqs = sample_freqs_rbf_joint(3, 1.0, 4, 2.0, 32, seed=5)
        x, y = g.standard_normal((2, 3))
        zx = rff_krossfuse_missing(x, 2.0, freqs)
        zy = rff_krossfuse_missing(y, 2.0, freqs)
        want = 2.0 * float(rff_single(x, freqs) @ rff_single(y, freqs))
        assert float(zx @ zy) == pytest.approx(want, rel=1e-13)

    def test_zero_C_allowed(self):
        """C = 0 drops the constant block entirely."""
        freqs = sample_freqs_rbf_joint(2, 1.0, 2, 1.0, 4, seed=0)
        z = rff_krossfuse_missing(np.ones(2), 0.0, freqs)
        np.testing.assert_array_equal(z, np.zeros(16))

    def test_negative_C_rejected(self):
        freqs = sample_freqs_rbf_joint(2, 1.0, 2, 1.0, 4, seed=0)
        with pytest.raises(ValueError, match="C"):
            rff_krossfuse_shared(np.ones(2), np.ones(2), -1.0, freqs)
