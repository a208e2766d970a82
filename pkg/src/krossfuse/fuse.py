"""High-level fusion entry points shared by the CLI and library callers.

Each function takes raw embedding batches plus a FusionConfig, applies the
per-embedding kernels' feature maps, and returns FusedEmbedding values with
provenance. The first configured kernel belongs to the cross-modal embedding,
the second to the uni-modal embedding; a single configured kernel applies to
both.
"""

from __future__ import annotations

import numpy as np

from .core import (
    EmbeddingMatrix,
    FusedEmbedding,
    FusionConfig,
    MODALITY_NONSHARED,
    MODALITY_SHARED,
    as_matrix,
    feature_rows,
    median_sq_bandwidth,
)
from .exact import MAX_ELEMENTS, krossfuse_missing_rows, krossfuse_shared_rows
from .rff import (
    rff_krossfuse_missing_rows,
    rff_krossfuse_shared_rows,
    sample_freqs_rbf_joint,
)
from .rp import kpomrp, rp_krossfuse_missing, rp_krossfuse_shared, sample_basis


def _data(x):
    return x.data if isinstance(x, EmbeddingMatrix) else as_matrix(x)


def _pair_kernels(config):
    if len(config.kernels) == 1:
        return config.kernels[0], config.kernels[0]
    if len(config.kernels) == 2:
        return config.kernels[0], config.kernels[1]
    raise ValueError(
        f"pair fusion takes one or two kernels (cross-modal, uni-modal); got {len(config.kernels)}"
    )


def _finite_pair(config):
    cross_spec, uni_spec = _pair_kernels(config)
    for role, spec in (("cross-modal", cross_spec), ("uni-modal", uni_spec)):
        if spec.kind == "rbf":
            raise ValueError(
                f"the {role} kernel is rbf, which has no finite feature map; use method rff"
            )
    return cross_spec, uni_spec


def _wrap(data, modality, method, config, name):
    return FusedEmbedding(
        matrix=EmbeddingMatrix(data, modality=modality, name=name),
        method=method,
        config_digest=config.digest(),
        seed=config.seed,
    )


def fuse_exact(cross_shared, uni_shared, config, cross_missing=None, cap=MAX_ELEMENTS):
    """Exact Kronecker fusion; returns (shared, missing or None)."""
    cross_spec, uni_spec = _finite_pair(config)
    Psi = feature_rows(cross_spec, _data(cross_shared))
    Gam = feature_rows(uni_spec, _data(uni_shared))
    if Psi.shape[0] != Gam.shape[0]:
        raise ValueError(
            f"cross-modal and uni-modal batches must be row-aligned: {Psi.shape[0]} vs {Gam.shape[0]}"
        )
    shared = _wrap(
        krossfuse_shared_rows(Psi, Gam, config.C, cap),
        MODALITY_SHARED, "exact", config, "fused-shared",
    )
    missing = None
    if cross_missing is not None:
        Psi_m = feature_rows(cross_spec, _data(cross_missing))
        missing = _wrap(
            krossfuse_missing_rows(Psi_m, config.C, Gam.shape[1], cap),
            MODALITY_NONSHARED, "exact", config, "fused-missing",
        )
    return shared, missing


def fuse_rp(cross_shared, uni_shared, config, cross_missing=None):
    """Random-projection fusion; both branches ride one basis drawn from the seed."""
    cross_spec, uni_spec = _finite_pair(config)
    Psi = feature_rows(cross_spec, _data(cross_shared))
    Gam = feature_rows(uni_spec, _data(uni_shared))
    if Psi.shape[0] != Gam.shape[0]:
        raise ValueError(
            f"cross-modal and uni-modal batches must be row-aligned: {Psi.shape[0]} vs {Gam.shape[0]}"
        )
    basis = sample_basis((Psi.shape[1], 2 * Gam.shape[1]), config.l, config.seed)
    shared = _wrap(
        rp_krossfuse_shared(Psi, Gam, config.C, basis),
        MODALITY_SHARED, "rp", config, "fused-shared",
    )
    missing = None
    if cross_missing is not None:
        Psi_m = feature_rows(cross_spec, _data(cross_missing))
        missing = _wrap(
            rp_krossfuse_missing(Psi_m, config.C, Gam.shape[1], basis),
            MODALITY_NONSHARED, "rp", config, "fused-missing",
        )
    return shared, missing


def fuse_kpomrp(cross_shared, uni_shared, config, cross_missing=None, cap=MAX_ELEMENTS):
    """Separate-projection baseline; config.l is the per-factor projection size."""
    cross_spec, uni_spec = _finite_pair(config)
    Psi = feature_rows(cross_spec, _data(cross_shared))
    Gam = feature_rows(uni_spec, _data(uni_shared))
    if Psi.shape[0] != Gam.shape[0]:
        raise ValueError(
            f"cross-modal and uni-modal batches must be row-aligned: {Psi.shape[0]} vs {Gam.shape[0]}"
        )
    if cross_missing is not None:
        raise ValueError("kpomrp is a shared-branch baseline; it has no missing-modality branch")
    basis = sample_basis((Psi.shape[1], 2 * Gam.shape[1]), config.l, config.seed)
    shared = _wrap(
        kpomrp(Psi, Gam, config.C, basis, cap),
        MODALITY_SHARED, "kpomrp", config, "fused-shared",
    )
    return shared, None


def fuse_rff(cross_shared, uni_shared, config, cross_missing=None):
    """Fourier-feature fusion for rbf kernels on both embeddings.

    Median-heuristic bandwidths resolve over all provided cross-modal rows
    (shared plus missing) for the cross kernel and over the uni-modal rows for
    the uni kernel, so both branches share one frequency set.
    """
    cross_spec, uni_spec = _pair_kernels(config)
    if cross_spec.kind != "rbf" or uni_spec.kind != "rbf":
        raise ValueError(
            f"method rff needs rbf kernels for both embeddings, got "
            f"{cross_spec.label()} and {uni_spec.label()}"
        )
    Gx = _data(cross_shared)
    U = _data(uni_shared)
    if Gx.shape[0] != U.shape[0]:
        raise ValueError(
            f"cross-modal and uni-modal batches must be row-aligned: {Gx.shape[0]} vs {U.shape[0]}"
        )
    Gm = _data(cross_missing) if cross_missing is not None else None
    if Gm is not None and Gm.shape[1] != Gx.shape[1]:
        raise ValueError(
            f"cross-modal dimensions differ between branches: {Gx.shape[1]} vs {Gm.shape[1]}"
        )
    B_cross = cross_spec.bandwidth
    if B_cross is None:
        pool = Gx if Gm is None else np.vstack([Gx, Gm])
        B_cross = median_sq_bandwidth(pool)
    B_uni = uni_spec.bandwidth
    if B_uni is None:
        B_uni = median_sq_bandwidth(U)
    freqs = sample_freqs_rbf_joint(Gx.shape[1], B_cross, U.shape[1], B_uni, config.r, config.seed)
    shared = _wrap(
        rff_krossfuse_shared_rows(Gx, U, config.C, freqs),
        MODALITY_SHARED, "rff", config, "fused-shared",
    )
    missing = None
    if Gm is not None:
        missing = _wrap(
            rff_krossfuse_missing_rows(Gm, config.C, freqs),
            MODALITY_NONSHARED, "rff", config, "fused-missing",
        )
    return shared, missing


_FUSERS = {
    "exact": fuse_exact,
    "rp": fuse_rp,
    "rff": fuse_rff,
    "kpomrp": fuse_kpomrp,
}


def fuse(method, cross_shared, uni_shared, config=None, cross_missing=None, **kwargs):
    """Dispatch to one of the fusion methods by name."""
    if method not in _FUSERS:
        raise ValueError(f"unknown fusion method {method!r}; expected one of {tuple(_FUSERS)}")
    config = config if config is not None else FusionConfig()
    return _FUSERS[method](cross_shared, uni_shared, config, cross_missing=cross_missing, **kwargs)
