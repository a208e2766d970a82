"""Product-kernel fusion of cross-modal and uni-modal embeddings.

Three fusion paths share one contract: the fused Gram is the cross-modal
kernel times (C plus the uni-modal kernel) on rows both embeddings cover,
and C times the cross-modal kernel wherever the uni-modal embedding is
missing. The exact path materializes Kronecker feature maps and serves as
the oracle; the rp path is an unbiased random-projection sketch; the rff
path handles rbf kernels through joint random Fourier features.
"""

from .core import (
    EmbeddingMatrix,
    FusedEmbedding,
    FusionConfig,
    KernelSpec,
    PsdReport,
    feature_rows,
    finite_feature,
    kernel_eval,
    kernel_matrix,
    median_sq_bandwidth,
    psd_check,
)
from .exact import (
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
from .fuse import fuse, fuse_exact, fuse_kpomrp, fuse_rff, fuse_rp
from .io import MatrixFormatError, read_labels, read_matrix, write_labels, write_matrix
from .rff import (
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
from .rp import (
    RandomBasis,
    RPKrossFuse,
    kpomrp,
    rp_fuse_pair,
    rp_krossfuse_missing,
    rp_krossfuse_shared,
    rp_multi,
    sample_basis,
)

__version__ = "0.1.0"

__all__ = [
    "EmbeddingMatrix",
    "FrequencySet",
    "FusedEmbedding",
    "FusionConfig",
    "FusionSizeError",
    "KernelSpec",
    "MatrixFormatError",
    "MAX_ELEMENTS",
    "PsdReport",
    "RandomBasis",
    "RPKrossFuse",
    "feature_rows",
    "finite_feature",
    "fuse",
    "fuse_exact",
    "fuse_kpomrp",
    "fuse_rff",
    "fuse_rp",
    "kernel_eval",
    "kernel_matrix",
    "kpomrp",
    "kron",
    "kron_rows",
    "krossfuse_missing",
    "krossfuse_missing_rows",
    "krossfuse_shared",
    "krossfuse_shared_rows",
    "median_sq_bandwidth",
    "missing_constant",
    "multi_kron",
    "product_fuse_gram",
    "psd_check",
    "read_labels",
    "read_matrix",
    "rff_joint",
    "rff_joint_rows",
    "rff_krossfuse_missing",
    "rff_krossfuse_missing_rows",
    "rff_krossfuse_shared",
    "rff_krossfuse_shared_rows",
    "rff_single",
    "rff_single_rows",
    "rp_fuse_pair",
    "rp_krossfuse_missing",
    "rp_krossfuse_shared",
    "rp_multi",
    "sample_basis",
    "sample_freqs_rbf",
    "sample_freqs_rbf_joint",
    "symmetrize_rows",
    "symmetrize_shared",
    "write_labels",
    "write_matrix",
]
