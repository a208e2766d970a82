"""Scalable fusion by joint random projection.

Each factor's feature vector is projected by its own unit-variance uniform
matrix and the projections are combined entrywise, with one global 1/sqrt(l)
applied to the fused vector. The Gram of the fused outputs is an unbiased
estimate of the exact Kronecker-path Gram: independence of the projection
matrices factorizes the expectation into the product of factor inner
products. The scaling is deliberately a single global 1/sqrt(l) per fused
vector, never one per factor, since folding it into every matrix would bias
the estimate for two or more factors.

Also provides the separate-projection baseline (kpomrp): project each factor
independently and take the Kronecker product of the projections.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .core import as_matrix, as_vector
from .exact import MAX_ELEMENTS, _check_C, kron_rows, missing_constant, symmetrize_rows

SQRT3 = float(np.sqrt(3.0))


@dataclass(frozen=True)
class RandomBasis:
    """Immutable set of projection matrices, one per factor, sharing a column count l."""

    matrices: tuple
    seed: int = 0

    def __post_init__(self):
        if len(self.matrices) == 0:
            raise ValueError("RandomBasis needs at least one matrix")
        mats = []
        for i, m in enumerate(self.matrices):
            arr = np.asarray(m, dtype=np.float64)
            if arr.ndim != 2:
                raise ValueError(f"projection matrix {i} must be 2-D, got shape {arr.shape}")
            mats.append(arr)
        l = mats[0].shape[1]
        for i, m in enumerate(mats):
            if m.shape[1] != l:
                raise ValueError(
                    f"projection matrices must share the column count: matrix {i} has "
                    f"{m.shape[1]} columns, expected {l}"
                )
            m.setflags(write=False)
        object.__setattr__(self, "matrices", tuple(mats))
        object.__setattr__(self, "seed", rng.validate_seed(self.seed))

    @property
    def l(self):
        return self.matrices[0].shape[1]

    @property
    def dims(self):
        return tuple(m.shape[0] for m in self.matrices)


def sample_basis(dims, l, seed):
    """Draw a RandomBasis with i.i.d. Uniform[-sqrt(3), sqrt(3)] entries.

    Entries have mean 0 and variance 1. Matrix i comes from the counter-based
    stream keyed by (seed, basis domain, i), filled row-major, so regeneration
    from the same arguments is bit-identical.
    """
    if int(l) != l or int(l) < 1:
        raise ValueError(f"l must be a positive integer, got {l!r}")
    dims = tuple(int(d) for d in dims)
    if len(dims) == 0:
        raise ValueError("dims must name at least one factor dimension")
    if any(d < 1 for d in dims):
        raise ValueError(f"all factor dimensions must be >= 1, got {dims}")
    mats = []
    for i, d in enumerate(dims):
        g = rng.stream(seed, rng.DOMAIN_BASIS, i)
        mats.append(g.uniform(-SQRT3, SQRT3, size=(d, int(l))))
    return RandomBasis(tuple(mats), rng.validate_seed(seed))


def _project_rows(batches, basis):
    """Entrywise product of projected row batches with the global 1/sqrt(l)."""
    if len(batches) != len(basis.matrices):
        raise ValueError(
            f"basis holds {len(basis.matrices)} matrices but {len(batches)} batches were given"
        )
    n = batches[0].shape[0]
    out = None
    for i, (A, U) in enumerate(zip(batches, basis.matrices)):
        if A.shape[0] != n:
            raise ValueError(f"batch {i} has {A.shape[0]} rows, expected {n}")
        if A.shape[1] != U.shape[0]:
            raise ValueError(
                f"batch {i} has dimension {A.shape[1]} but basis matrix {i} expects {U.shape[0]}"
            )
        P = A @ U
        out = P if out is None else out * P
    return out / np.sqrt(basis.l)


def rp_fuse_pair(a, b, basis):
    """Fused vector (1/sqrt(l)) (U1' a) entrywise-times (U2' b)."""
    a = as_vector(a, "a")
    b = as_vector(b, "b")
    return _project_rows([a[None, :], b[None, :]], basis)[0]


def rp_multi(feat_batches, basis):
    """Fused batch for m >= 2 factors: entrywise product of all projections."""
    if len(feat_batches) < 2:
        raise ValueError("rp_multi needs at least two factor batches")
    return _project_rows([as_matrix(A) for A in feat_batches], basis)


def rp_krossfuse_shared(cross_rows, uni_rows, C, basis):
    """Projected fusion of cross-modal rows with symmetrized uni-modal rows."""
    Psi = as_matrix(cross_rows)
    S = symmetrize_rows(uni_rows, C)
    if basis.dims != (Psi.shape[1], S.shape[1]):
        raise ValueError(
            f"basis dims {basis.dims} do not match (cross dim, 2 x uni dim) = "
            f"({Psi.shape[1]}, {S.shape[1]})"
        )
    return _project_rows([Psi, S], basis)


def rp_krossfuse_missing(cross_rows, C, d_uni, basis):
    """Projected fusion for rows the uni-modal embedding never sees.

    Must receive the same basis as the shared branch; the constant missing
    vector rides through the second projection matrix. C = 0 is allowed and
    gives the zero matrix.
    """
    Psi = as_matrix(cross_rows)
    if int(d_uni) != d_uni or int(d_uni) < 1:
        raise ValueError(f"d_uni must be a positive integer, got {d_uni!r}")
    d_uni = int(d_uni)
    if basis.dims != (Psi.shape[1], 2 * d_uni):
        raise ValueError(
            f"basis dims {basis.dims} do not match (cross dim, 2 x uni dim) = "
            f"({Psi.shape[1]}, {2 * d_uni})"
        )
    if C == 0:
        return np.zeros((Psi.shape[0], basis.l))
    m = missing_constant(C, d_uni)
    row = m @ basis.matrices[1]
    return (Psi @ basis.matrices[0]) * row[None, :] / np.sqrt(basis.l)


def kpomrp(cross_rows, uni_rows, C, basis, cap=MAX_ELEMENTS):
    """Baseline: project each factor separately, then take the Kronecker product.

    Each projection is scaled by 1/sqrt(l_each) on its own, so the output has
    length l_each squared where l_each = basis.l. Also unbiased for the exact
    Gram, but the output length is quadratic in the projection dimension.
    """
    Psi = as_matrix(cross_rows)
    S = symmetrize_rows(uni_rows, C)
    if basis.dims != (Psi.shape[1], S.shape[1]):
        raise ValueError(
            f"basis dims {basis.dims} do not match (cross dim, 2 x uni dim) = "
            f"({Psi.shape[1]}, {S.shape[1]})"
        )
    l_each = basis.l
    P1 = (Psi @ basis.matrices[0]) / np.sqrt(l_each)
    P2 = (S @ basis.matrices[1]) / np.sqrt(l_each)
    return kron_rows(P1, P2, cap)


class RPKrossFuse:
    """Binds one RandomBasis to both fusion branches so they cannot diverge.

    The shared and missing branches are only cross-modally consistent when
    they ride the same projection matrices; constructing them through one
    instance makes passing different bases impossible.
    """

    def __init__(self, d_cross, d_uni, C, l, seed):
        self.C = _check_C(C)
        self.d_cross = int(d_cross)
        self.d_uni = int(d_uni)
        self.basis = sample_basis((self.d_cross, 2 * self.d_uni), l, seed)

    def shared(self, cross_rows, uni_rows):
        return rp_krossfuse_shared(cross_rows, uni_rows, self.C, self.basis)

    def missing(self, cross_rows):
        return rp_krossfuse_missing(cross_rows, self.C, self.d_uni, self.basis)
