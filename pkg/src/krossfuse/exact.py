"""Exact fusion by Kronecker feature maps.

The fused feature map is the Kronecker product of the cross-modal feature
vector with a symmetrized uni-modal feature vector. The symmetrization embeds
a constant-C offset so that samples from the modality the uni-modal embedding
never sees (the "missing" branch) still land in the same space with the right
inner products:

    shared branch   (1/sqrt(2)) [ sqrt(C/d) + phi, sqrt(C/d) - phi ]
    missing branch  [ sqrt(C/(2d)), ..., sqrt(C/(2d)) ]   (2d entries)

Inner products then factorize: shared-shared gives k_cross * (C + k_uni),
and any pair involving the missing branch gives C * k_cross. This module is
the oracle the randomized paths are tested against.
"""

from __future__ import annotations

import numpy as np

from .core import as_matrix, as_vector

# Element cap on materialized fused outputs. Beyond this, use the rp or rff path.
MAX_ELEMENTS = 2**27


class FusionSizeError(ValueError):
    """Raised when an exact fused output would exceed the element cap."""


def _check_cap(rows, cols, cap):
    if cap is None:
        return
    total = int(rows) * int(cols)
    if total > cap:
        raise FusionSizeError(
            f"fused output of {rows} x {cols} = {total} elements exceeds the cap of {cap}; "
            "use method rp (random projection) or rff (random Fourier features) instead, "
            "or raise the cap explicitly"
        )


def _check_C(C):
    c = float(C)
    if not np.isfinite(c) or c <= 0:
        raise ValueError(f"C must be a positive finite real, got {C!r}")
    return c


def kron(u, v):
    """Kronecker product of two vectors; entry (i*|v| + j) equals u_i * v_j."""
    u = as_vector(u, "u")
    v = as_vector(v, "v")
    return np.kron(u, v)


def multi_kron(feats):
    """Iterated Kronecker product; inner products factorize across the factors."""
    if len(feats) == 0:
        raise ValueError("multi_kron needs at least one vector")
    out = as_vector(feats[0], "feats[0]")
    for i, f in enumerate(feats[1:], start=1):
        out = np.kron(out, as_vector(f, f"feats[{i}]"))
    return out


def kron_rows(A, B, cap=MAX_ELEMENTS):
    """Row-wise Kronecker product of two aligned batches."""
    A = as_matrix(A)
    B = as_matrix(B)
    if A.shape[0] != B.shape[0]:
        raise ValueError(f"row counts differ: {A.shape[0]} vs {B.shape[0]}")
    n = A.shape[0]
    _check_cap(n, A.shape[1] * B.shape[1], cap)
    return np.einsum("ni,nj->nij", A, B).reshape(n, A.shape[1] * B.shape[1])


def symmetrize_shared(phi, C):
    """Symmetrized shared-branch vector of length 2d for a uni-modal feature phi."""
    phi = as_vector(phi, "phi")
    c = np.sqrt(_check_C(C) / phi.size)
    return np.concatenate([c + phi, c - phi]) / np.sqrt(2.0)


def symmetrize_rows(Phi, C):
    """Row-wise symmetrize_shared."""
    Phi = as_matrix(Phi)
    c = np.sqrt(_check_C(C) / Phi.shape[1])
    return np.hstack([c + Phi, c - Phi]) / np.sqrt(2.0)


def missing_constant(C, d):
    """Missing-branch vector: 2d entries, all sqrt(C/(2d)); squared norm exactly C."""
    C = _check_C(C)
    if int(d) != d or int(d) < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    d = int(d)
    return np.full(2 * d, np.sqrt(C / (2 * d)))


def krossfuse_shared(cross_feat, uni_feat, C, cap=MAX_ELEMENTS):
    """Fused vector for a sample seen by both embeddings."""
    psi = as_vector(cross_feat, "cross_feat")
    s = symmetrize_shared(uni_feat, C)
    _check_cap(1, psi.size * s.size, cap)
    return np.kron(psi, s)


def krossfuse_missing(cross_feat, C, d_uni, cap=MAX_ELEMENTS):
    """Fused vector for a sample the uni-modal embedding never sees."""
    psi = as_vector(cross_feat, "cross_feat")
    m = missing_constant(C, d_uni)
    _check_cap(1, psi.size * m.size, cap)
    return np.kron(psi, m)


def krossfuse_shared_rows(cross_rows, uni_rows, C, cap=MAX_ELEMENTS):
    """Batch krossfuse_shared over aligned rows."""
    return kron_rows(as_matrix(cross_rows), symmetrize_rows(uni_rows, C), cap)


def krossfuse_missing_rows(cross_rows, C, d_uni, cap=MAX_ELEMENTS):
    """Batch krossfuse_missing."""
    Psi = as_matrix(cross_rows)
    m = missing_constant(C, d_uni)
    n = Psi.shape[0]
    _check_cap(n, Psi.shape[1] * m.size, cap)
    return np.einsum("ni,j->nij", Psi, m).reshape(n, Psi.shape[1] * m.size)


def product_fuse_gram(K_cross, K_uni, C):
    """Fused Gram at the kernel level: K_cross elementwise-times (C + K_uni).

    Equivalent to the Gram of krossfuse_shared outputs when the kernels admit
    finite feature maps, and the only route for rbf kernels at small n.
    """
    K1 = as_matrix(K_cross)
    K2 = as_matrix(K_uni)
    if K1.shape != K2.shape:
        raise ValueError(f"Gram shapes differ: {K1.shape} vs {K2.shape}")
    return K1 * (_check_C(C) + K2)
