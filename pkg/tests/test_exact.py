"""Exact fusion: Kronecker maps, symmetrization, and the product law.

The key identities checked here:
  <kron(a, b), kron(c, d)>          = <a, c> * <b, d>
  <sym(x), sym(y)>                  = C + <phi(x), phi(y)>   (shared rows)
  <fused shared, fused shared>      = k_cross * (C + k_uni)
  <fused anything, fused missing>   = C * k_cross
"""

import numpy as np
import pytest

from krossfuse.core import KernelSpec, feature_rows, kernel_matrix
from krossfuse.exact import (
    FusionSizeError,
    MAX_ELEMENTS,
    kron,
    kron_rows,
    krossfuse_missing,
    krossfuse_missing_rows,
    krossfuse_shared,
    krossfuse_shared_rows,
    missing_constant,
    multi_kron,
    product_fuse_gram,
    symmetrize_rows,
    symmetrize_shared,
)


class TestKron:
    def test_hand_oracle(self):
        """(1,2) x (3,4) = (3, 4, 6, 8)."""
        np.testing.assert_array_equal(kron([1.0, 2.0], [3.0, 4.0]), [3.0, 4.0, 6.0, 8.0])

    def test_inner_product_factorizes(self):
        """<a x b, c x d> = <a,c><b,d> to 1e-12."""
        g = np.random.default_rng(0)
        for _ in range(50):
            a, c = g.standard_normal((2, 5))
            b, d = g.standard_normal((2, 3))
            lhs = float(kron(a, b) @ kron(c, d))
            rhs = float(a @ c) * float(b @ d)
            assert abs(lhs - rhs) <= 1e-12

    def test_multi_kron_three_factors(self):
        g = np.random.default_rng(1)
        a, b, c = g.standard_normal((3, 3))
        np.testing.assert_allclose(multi_kron([a, b, c]), kron(kron(a, b), c), rtol=1e-15)

    def test_multi_kron_rejects_empty(self):
        with pytest.raises(ValueError, match="one"):
            multi_kron([])

    def test_kron_rows_matches_vector_kron(self):
        g = np.random.default_rng(2)
        A = g.standard_normal((4, 3))
        B = g.standard_normal((4, 2))
        rows = kron_rows(A, B)
        assert rows.shape == (4, 6)
        for i in range(4):
            np.testing.assert_array_equal(rows[i], kron(A[i], B[i]))

    def test_size_cap(self):
        A = np.ones((1, 2**14))
        B = np.ones((1, 2**14))
        with pytest.raises(FusionSizeError, match="rp"):
            kron_rows(A, B, cap=MAX_ELEMENTS)

    def test_row_count_mismatch(self):
        with pytest.raises(ValueError, match="row"):
            kron_rows(np.ones((2, 2)), np.ones((3, 2)))


class TestSymmetrize:
    def test_hand_oracle_scalar(self):
        """C=1, phi=(0.5): sqrt(1/1)=1, halves (1.5, 0.5)/sqrt(2)."""
        got = symmetrize_shared([0.5], 1.0)
        want = np.array([1.5, 0.5]) / np.sqrt(2.0)
        np.testing.assert_allclose(got, want, rtol=0, atol=1e-15)
        np.testing.assert_allclose(got, [1.0606601717798212, 0.35355339059327373], rtol=0, atol=1e-15)

    def test_zero_feature_gives_constant(self):
        """phi = 0 in d=2 with C=4: both halves sqrt(4/2)/sqrt(2) = 1."""
        np.testing.assert_allclose(symmetrize_shared([0.0, 0.0], 4.0), np.ones(4), rtol=0, atol=1e-15)

    def test_self_inner_is_C_plus_norm(self):
        """||sym(phi)||^2 = C + ||phi||^2."""
        g = np.random.default_rng(3)
        for _ in range(30):
            phi = g.standard_normal(6)
            C = float(g.uniform(0.1, 10.0))
            s = symmetrize_shared(phi, C)
            assert float(s @ s) == pytest.approx(C + float(phi @ phi), rel=1e-13)

    def test_pairwise_inner_is_C_plus_dot(self):
        g = np.random.default_rng(4)
        x, y = g.standard_normal((2, 5))
        sx, sy = symmetrize_shared(x, 2.0), symmetrize_shared(y, 2.0)
        assert float(sx @ sy) == pytest.approx(2.0 + float(x @ y), rel=1e-13)

    def test_inner_with_missing_is_C(self):
        """<sym(phi), missing> = C regardless of phi."""
        g = np.random.default_rng(5)
        for C in (0.1, 1.0, 10.0):
            m = missing_constant(C, 4)
            for _ in range(10):
                s = symmetrize_shared(g.standard_normal(4), C)
                assert float(s @ m) == pytest.approx(C, rel=1e-13)

    def test_missing_hand_oracle(self):
        """d=1, C=1: both entries sqrt(1/2)."""
        np.testing.assert_allclose(missing_constant(1.0, 1), np.sqrt([0.5, 0.5]), rtol=1e-15)

    def test_missing_self_inner_is_C(self):
        for d in (1, 3, 17):
            m = missing_constant(2.5, d)
            assert float(m @ m) == pytest.approx(2.5, rel=1e-13)

    def test_rows_variant_matches(self):
        g = np.random.default_rng(6)
        X = g.standard_normal((5, 3))
        rows = symmetrize_rows(X, 1.5)
        for i in range(5):
            np.testing.assert_array_equal(rows[i], symmetrize_shared(X[i], 1.5))

    def test_invalid_C(self):
        for bad in (0.0, -1.0, np.nan, np.inf):
            with pytest.raises(ValueError, match="C"):
                symmetrize_shared([1.0], bad)


class TestKrossFuse:
    def test_missing_hand_oracle(self):
        """psi=(1,0), C=1, d_uni=1: kron((1,0), (sqrt(.5), sqrt(.5)))."""
        got = krossfuse_missing([1.0, 0.0], 1.0, 1)
        np.testing.assert_allclose(got, [np.sqrt(0.5), np.sqrt(0.5), 0.0, 0.0], rtol=1e-15)

    def test_shared_dimension(self):
        z = krossfuse_shared(np.ones(3), np.ones(4), 1.0)
        assert z.shape == (24,)

    def test_shared_shared_identity(self):
        """<z(x), z(y)> = k_cross(x,y) * (C + k_uni(x,y)) to 1e-12."""
        g = np.random.default_rng(7)
        for C in (0.1, 1.0, 10.0):
            psi = g.standard_normal((6, 4))
            gam = g.standard_normal((6, 3))
            Z = krossfuse_shared_rows(psi, gam, C)
            want = (psi @ psi.T) * (C + gam @ gam.T)
            np.testing.assert_allclose(Z @ Z.T, want, rtol=0, atol=1e-12)

    def test_shared_missing_identity(self):
        """<z_shared(x), z_missing(y)> = C * k_cross(x,y)."""
        g = np.random.default_rng(8)
        C = 2.0
        psi_s = g.standard_normal((4, 5))
        gam = g.standard_normal((4, 3))
        psi_m = g.standard_normal((3, 5))
        Zs = krossfuse_shared_rows(psi_s, gam, C)
        Zm = krossfuse_missing_rows(psi_m, C, 3)
        np.testing.assert_allclose(Zs @ Zm.T, C * (psi_s @ psi_m.T), rtol=0, atol=1e-12)

    def test_missing_missing_identity(self):
        g = np.random.default_rng(9)
        psi = g.standard_normal((4, 5))
        Zm = krossfuse_missing_rows(psi, 3.0, 2)
        np.testing.assert_allclose(Zm @ Zm.T, 3.0 * (psi @ psi.T), rtol=0, atol=1e-12)

    def test_fused_gram_psd(self):
        """The fused Gram is PSD, as a product of PSD factors must be."""
        g = np.random.default_rng(10)
        psi = feature_rows(KernelSpec("cosine"), g.standard_normal((10, 6)))
        gam = feature_rows(KernelSpec("cosine"), g.standard_normal((10, 4)))
        Z = krossfuse_shared_rows(psi, gam, 1.0)
        assert np.linalg.eigvalsh(Z @ Z.T)[0] >= -1e-9

    def test_product_fuse_gram_matches_feature_route(self):
        """Gram-level fusion agrees with the explicit feature construction."""
        g = np.random.default_rng(11)
        X1 = g.standard_normal((8, 5))
        X2 = g.standard_normal((8, 3))
        s1, s2 = KernelSpec("cosine"), KernelSpec("linear")
        K1 = kernel_matrix(s1, X1)
        K2 = kernel_matrix(s2, X2)
        Z = krossfuse_shared_rows(feature_rows(s1, X1), feature_rows(s2, X2), 1.0)
        np.testing.assert_allclose(product_fuse_gram(K1, K2, 1.0), Z @ Z.T, rtol=0, atol=1e-12)

    def test_product_fuse_gram_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            product_fuse_gram(np.eye(2), np.eye(3), 1.0)

    def test_size_cap_names_alternatives(self):
        with pytest.raises(FusionSizeError, match="rff"):
            krossfuse_shared_rows(np.ones((1, 2**14)), np.ones((1, 2**13)), 1.0, cap=MAX_ELEMENTS)
