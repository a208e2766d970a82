"""Random Fourier features for shift-invariant kernels.

A Gaussian kernel exp(-||x - y||^2 / B) is the expectation of
cos(w'(x - y)) when w is drawn from the zero-mean Gaussian with covariance
(2/B) I, so the interleaved cosine/sine map

    phi_r(z) = (1/sqrt(r)) [cos(w_1'z), sin(w_1'z), ..., cos(w_r'z), sin(w_r'z)]

satisfies E[phi_r(x)'phi_r(y)] = k(x, y) and phi_r(z)'phi_r(z) = 1. The joint
map sums the phases of two frequency families, one per kernel, and estimates
the product of the two kernels in a single 2r-dimensional map.

The fused construction concatenates sqrt(C) times the single map on the
cross-modal features with the joint map (shared branch) or with zeros
(missing branch), giving a 4r-dimensional embedding whose expected inner
products are k_cross * (C + k_uni) within the shared branch and C * k_cross
for any pair touching the missing branch.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from .core import KernelSpec, as_matrix, as_vector


@dataclass(frozen=True)
class FrequencySet:
    """Immutable frequency draws, one family per kernel; omega arrays are r x d."""

    omega1: np.ndarray
    kernel1: KernelSpec
    seed: int
    omega2: np.ndarray = None
    kernel2: KernelSpec = None

    def __post_init__(self):
        w1 = np.asarray(self.omega1, dtype=np.float64)
        if w1.ndim != 2 or w1.shape[0] < 1:
            raise ValueError(f"omega1 must be a non-empty r x d matrix, got shape {w1.shape}")
        w1.setflags(write=False)
        object.__setattr__(self, "omega1", w1)
        if self.omega2 is not None:
            w2 = np.asarray(self.omega2, dtype=np.float64)
            if w2.ndim != 2 or w2.shape[0] != w1.shape[0]:
                raise ValueError(
                    f"omega2 must be r x d2 with r = {w1.shape[0]}, got shape {w2.shape}"
                )
            w2.setflags(write=False)
            object.__setattr__(self, "omega2", w2)
        object.__setattr__(self, "seed", rng.validate_seed(self.seed))

    @property
    def r(self):
        return self.omega1.shape[0]


def _check_rbf_params(d, r, B):
    if int(d) != d or int(d) < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    if int(r) != r or int(r) < 1:
        raise ValueError(f"r must be a positive integer, got {r!r}")
    b = float(B)
    if not np.isfinite(b) or b <= 0:
        raise ValueError(f"rbf bandwidth must be a positive finite real, got {B!r}")
    return int(d), int(r), b


def sample_freqs_rbf(d, r, B, seed):
    """Draw r frequencies for exp(-||x-y||^2/B): rows i.i.d. N(0, (2/B) I_d)."""
    d, r, B = _check_rbf_params(d, r, B)
    g = rng.stream(seed, rng.DOMAIN_FREQ, 0)
    omega = g.normal(0.0, np.sqrt(2.0 / B), size=(r, d))
    return FrequencySet(omega, KernelSpec("rbf", B), rng.validate_seed(seed))


def sample_freqs_rbf_joint(d1, B1, d2, B2, r, seed):
    """Draw the two frequency families of a joint map, one rbf kernel per factor.

    The first family is bit-identical to sample_freqs_rbf(d1, r, B1, seed), so
    the single-map block of the fused construction reuses the same draws.
    """
    d1, r, B1 = _check_rbf_params(d1, r, B1)
    d2, _, B2 = _check_rbf_params(d2, r, B2)
    omega1 = rng.stream(seed, rng.DOMAIN_FREQ, 0).normal(0.0, np.sqrt(2.0 / B1), size=(r, d1))
    omega2 = rng.stream(seed, rng.DOMAIN_FREQ, 1).normal(0.0, np.sqrt(2.0 / B2), size=(r, d2))
    return FrequencySet(
        omega1, KernelSpec("rbf", B1), rng.validate_seed(seed), omega2, KernelSpec("rbf", B2)
    )


def _phases_to_features(T):
    """Map an n x r phase matrix to n x 2r interleaved cos/sin rows, scaled 1/sqrt(r)."""
    n, r = T.shape
    out = np.empty((n, 2 * r))
    out[:, 0::2] = np.cos(T)
    out[:, 1::2] = np.sin(T)
    out /= np.sqrt(r)
    return out


def rff_single_rows(Z, freqs):
    """Single-kernel feature rows, n x 2r; each row has unit self inner product."""
    Z = as_matrix(Z)
    if Z.shape[1] != freqs.omega1.shape[1]:
        raise ValueError(
            f"input dimension {Z.shape[1]} does not match omega1 dimension {freqs.omega1.shape[1]}"
        )
    return _phases_to_features(Z @ freqs.omega1.T)


def rff_single(z, freqs):
    """Single-kernel feature vector of length 2r."""
    return rff_single_rows(as_vector(z, "z")[None, :], freqs)[0]


def rff_joint_rows(Z1, Z2, freqs):
    """Joint feature rows estimating the product of the two kernels, n x 2r."""
    if freqs.omega2 is None:
        raise ValueError("joint features need a FrequencySet with omega2; see sample_freqs_rbf_joint")
    Z1 = as_matrix(Z1)
    Z2 = as_matrix(Z2)
    if Z1.shape[0] != Z2.shape[0]:
        raise ValueError(f"row counts differ: {Z1.shape[0]} vs {Z2.shape[0]}")
    if Z1.shape[1] != freqs.omega1.shape[1]:
        raise ValueError(
            f"first input dimension {Z1.shape[1]} does not match omega1 dimension "
            f"{freqs.omega1.shape[1]}"
        )
    if Z2.shape[1] != freqs.omega2.shape[1]:
        raise ValueError(
            f"second input dimension {Z2.shape[1]} does not match omega2 dimension "
            f"{freqs.omega2.shape[1]}"
        )
    return _phases_to_features(Z1 @ freqs.omega1.T + Z2 @ freqs.omega2.T)


def rff_joint(z1, z2, freqs):
    """Joint feature vector of length 2r."""
    return rff_joint_rows(as_vector(z1, "z1")[None, :], as_vector(z2, "z2")[None, :], freqs)[0]


def _check_nonneg_C(C):
    c = float(C)
    if not np.isfinite(c) or c < 0:
        raise ValueError(f"C must be a non-negative finite real, got {C!r}")
    return c


def rff_krossfuse_shared_rows(cross_rows, uni_rows, C, freqs):
    """Fused rows for samples seen by both embeddings, n x 4r.

    Concatenates sqrt(C) times the single map on the cross-modal features with
    the joint map of (cross-modal, uni-modal) features. Self inner products
    are C + 1; expected Grams are k_cross * (C + k_uni).
    """
    C = _check_nonneg_C(C)
    single = rff_single_rows(cross_rows, freqs)
    joint = rff_joint_rows(cross_rows, uni_rows, freqs)
    return np.hstack([np.sqrt(C) * single, joint])


def rff_krossfuse_shared(cross_feat, uni_feat, C, freqs):
    """Fused vector of length 4r for a sample seen by both embeddings."""
    return rff_krossfuse_shared_rows(
        as_vector(cross_feat, "cross_feat")[None, :],
        as_vector(uni_feat, "uni_feat")[None, :],
        C,
        freqs,
    )[0]


def rff_krossfuse_missing_rows(cross_rows, C, freqs):
    """Fused rows for samples the uni-modal embedding never sees, n x 4r.

    The joint block is zero; self inner products are exactly C, and expected
    Grams against either branch are C * k_cross.
    """
    C = _check_nonneg_C(C)
    single = rff_single_rows(cross_rows, freqs)
    return np.hstack([np.sqrt(C) * single, np.zeros_like(single)])


def rff_krossfuse_missing(cross_feat, C, freqs):
    """Fused vector of length 4r for a sample with no uni-modal embedding."""
    return rff_krossfuse_missing_rows(as_vector(cross_feat, "cross_feat")[None, :], C, freqs)[0]
