"""Core types, kernel evaluation, and kernel-matrix construction.

Everything downstream (exact fusion, random projections, Fourier features,
evaluation) builds on the types and kernel primitives defined here. All
numerics are 64-bit; 32-bit input is accepted and widened on entry.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import rng

MODALITY_SHARED = "shared"
MODALITY_NONSHARED = "nonshared"
MODALITIES = (MODALITY_SHARED, MODALITY_NONSHARED)

KERNEL_KINDS = ("linear", "cosine", "rbf")

FUSION_METHODS = ("exact", "rp", "rff", "kpomrp")


def as_matrix(data):
    """Coerce input to a finite 2-D float64 array."""
    arr = np.asarray(data)
    if arr.dtype != np.float64:
        arr = arr.astype(np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {arr.shape}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError(f"matrix needs at least one row and one column, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("matrix entries must be finite (no NaN or Inf)")
    return arr


def as_vector(x, name="vector"):
    """Coerce input to a finite 1-D float64 array of length >= 1."""
    arr = np.asarray(x)
    if arr.dtype != np.float64:
        arr = arr.astype(np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if arr.size < 1:
        raise ValueError(f"{name} must have at least one entry")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} entries must be finite (no NaN or Inf)")
    return arr


@dataclass(frozen=True)
class KernelSpec:
    """A similarity kernel: linear, cosine, or rbf with bandwidth.

    For rbf, ``bandwidth=None`` means "resolve by the median heuristic on the
    batch at hand" (the median squared pairwise distance); pairwise evaluation
    then requires an explicit bandwidth. Non-rbf kinds carry no bandwidth.
    """

    kind: str
    bandwidth: float | None = None

    def __post_init__(self):
        if self.kind not in KERNEL_KINDS:
            raise ValueError(f"unknown kernel kind {self.kind!r}; expected one of {KERNEL_KINDS}")
        if self.kind == "rbf":
            if self.bandwidth is not None:
                b = float(self.bandwidth)
                if not np.isfinite(b) or b <= 0:
                    raise ValueError(f"rbf bandwidth must be a positive finite real, got {self.bandwidth!r}")
                object.__setattr__(self, "bandwidth", b)
        else:
            # bandwidth is meaningful only for rbf; drop it silently
            object.__setattr__(self, "bandwidth", None)

    @classmethod
    def parse(cls, text):
        """Parse the flag grammar: ``linear``, ``cosine``, ``rbf:<B>``, ``rbf:median``."""
        s = str(text).strip()
        if s in ("linear", "cosine"):
            return cls(s)
        if s.startswith("rbf:"):
            arg = s[len("rbf:"):]
            if arg == "median":
                return cls("rbf", None)
            try:
                return cls("rbf", float(arg))
            except ValueError:
                raise ValueError(
                    f"bad rbf bandwidth {arg!r}; expected rbf:<positive real> or rbf:median"
                ) from None
        raise ValueError(
            f"bad kernel spec {text!r}; expected linear, cosine, rbf:<B>, or rbf:median"
        )

    def label(self):
        """Inverse of parse: a string that parses back to this spec."""
        if self.kind != "rbf":
            return self.kind
        if self.bandwidth is None:
            return "rbf:median"
        return f"rbf:{self.bandwidth:.17g}"

    def resolved(self, batch):
        """Return a spec with a concrete bandwidth, using the median heuristic if needed."""
        if self.kind != "rbf" or self.bandwidth is not None:
            return self
        return KernelSpec("rbf", median_sq_bandwidth(batch))


@dataclass
class EmbeddingMatrix:
    """Dense matrix of sample embeddings, rows = samples, with a modality tag."""

    data: np.ndarray
    modality: str = MODALITY_SHARED
    name: str = ""

    def __post_init__(self):
        self.data = as_matrix(self.data)
        if self.modality not in MODALITIES:
            raise ValueError(f"modality must be one of {MODALITIES}, got {self.modality!r}")

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


@dataclass(frozen=True)
class FusionConfig:
    """Fusion hyperparameters: C, projection dimension l, frequency count r, seed, kernels."""

    C: float = 1.0
    l: int = 4096
    r: int = 2048
    seed: int = 0
    kernels: tuple = (KernelSpec("linear"), KernelSpec("linear"))

    def __post_init__(self):
        c = float(self.C)
        if not np.isfinite(c) or c <= 0:
            raise ValueError(f"C must be a positive finite real, got {self.C!r}")
        object.__setattr__(self, "C", c)
        for field_name in ("l", "r"):
            v = getattr(self, field_name)
            if int(v) != v or int(v) < 1:
                raise ValueError(f"{field_name} must be a positive integer, got {v!r}")
            object.__setattr__(self, field_name, int(v))
        object.__setattr__(self, "seed", rng.validate_seed(self.seed))
        kernels = tuple(self.kernels)
        if not kernels:
            raise ValueError("kernels must name at least one KernelSpec")
        for k in kernels:
            if not isinstance(k, KernelSpec):
                raise ValueError(f"kernels entries must be KernelSpec, got {k!r}")
        object.__setattr__(self, "kernels", kernels)

    def digest(self):
        """Deterministic hex digest of the configuration."""
        payload = {
            "C": self.C,
            "l": self.l,
            "r": self.r,
            "seed": self.seed,
            "kernels": [k.label() for k in self.kernels],
        }
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


@dataclass
class FusedEmbedding:
    """Fused output matrix plus provenance (method, config digest, seed)."""

    matrix: EmbeddingMatrix
    method: str
    config_digest: str
    seed: int

    def __post_init__(self):
        if self.method not in FUSION_METHODS:
            raise ValueError(f"method must be one of {FUSION_METHODS}, got {self.method!r}")
        self.seed = rng.validate_seed(self.seed)


def median_sq_bandwidth(batch):
    """Median squared pairwise distance of a batch (the median heuristic)."""
    X = as_matrix(batch)
    n = X.shape[0]
    if n < 2:
        raise ValueError("median heuristic needs at least two rows")
    sq = _pairwise_sq_dists(X)
    med = float(np.median(sq[np.triu_indices(n, 1)]))
    if med <= 0:
        raise ValueError("median heuristic is degenerate: median pairwise distance is zero")
    return med


def _pairwise_sq_dists(X):
    norms = np.einsum("ij,ij->i", X, X)
    sq = norms[:, None] + norms[None, :] - 2.0 * (X @ X.T)
    return np.maximum(sq, 0.0)


def kernel_eval(spec, x, y):
    """Evaluate the kernel on a single pair of vectors."""
    x = as_vector(x, "x")
    y = as_vector(y, "y")
    if x.size != y.size:
        raise ValueError(f"dimension mismatch: {x.size} vs {y.size}")
    if spec.kind == "linear":
        return float(x @ y)
    if spec.kind == "cosine":
        dxx = float(x @ x)
        dyy = float(y @ y)
        if dxx == 0.0 or dyy == 0.0:
            raise ValueError("cosine kernel is undefined for zero vectors")
        # dot/sqrt(dxx*dyy) makes k(x,x) evaluate to exactly 1.0
        return float((x @ y) / np.sqrt(dxx * dyy))
    if spec.bandwidth is None:
        raise ValueError(
            "rbf bandwidth is unresolved; give rbf:<B> or resolve the median heuristic on a batch"
        )
    d = x - y
    return float(np.exp(-(d @ d) / spec.bandwidth))


def finite_feature(spec, x):
    """Finite-dimensional feature map: identity for linear, unit-normalize for cosine."""
    x = as_vector(x, "x")
    if spec.kind == "linear":
        return x
    if spec.kind == "cosine":
        nrm = float(np.linalg.norm(x))
        if nrm == 0.0:
            raise ValueError("cosine feature map is undefined for zero vectors")
        return x / nrm
    raise ValueError("rbf has no finite-dimensional feature map; use the rff module")


def feature_rows(spec, batch):
    """Apply finite_feature row-wise to a batch."""
    X = as_matrix(batch)
    if spec.kind == "linear":
        return X
    if spec.kind == "cosine":
        norms = np.linalg.norm(X, axis=1, keepdims=True)
        bad = np.flatnonzero(norms.ravel() == 0.0)
        if bad.size:
            raise ValueError(f"cosine feature map is undefined for zero vectors (row {bad[0]})")
        return X / norms
    raise ValueError("rbf has no finite-dimensional feature map; use the rff module")


def _mirror_upper(G, diag):
    """Build a bitwise-symmetric matrix from the strict upper triangle plus a diagonal."""
    U = np.triu(G, 1)
    out = U + U.T
    np.fill_diagonal(out, diag)
    return out


def kernel_matrix(spec, E):
    """Symmetric n x n matrix of pairwise kernel values for a batch.

    The strict upper triangle is mirrored so the output is symmetric bit for
    bit, and the diagonal is exact (1 for cosine and rbf, squared norms for
    linear). An rbf spec without a bandwidth resolves by the median heuristic.
    """
    X = E.data if isinstance(E, EmbeddingMatrix) else as_matrix(E)
    n = X.shape[0]
    if spec.kind == "linear":
        G = X @ X.T
        return _mirror_upper(G, np.einsum("ij,ij->i", X, X))
    if spec.kind == "cosine":
        N = feature_rows(spec, X)
        return _mirror_upper(N @ N.T, np.ones(n))
    bandwidth = spec.bandwidth
    if bandwidth is None:
        bandwidth = median_sq_bandwidth(X)
    K = np.exp(-_pairwise_sq_dists(X) / bandwidth)
    return _mirror_upper(K, np.ones(n))


class PsdReport(NamedTuple):
    ok: bool
    min_eigenvalue: float


def psd_check(K, tol=1e-8, relative=True):
    """Test positive semi-definiteness via the smallest eigenvalue.

    With ``relative=True`` (the default) the eigenvalue threshold is
    ``-tol * max(1, largest eigenvalue)``; otherwise ``-tol`` absolutely.
    """
    K = as_matrix(K)
    if K.shape[0] != K.shape[1]:
        raise ValueError(f"psd_check needs a square matrix, got shape {K.shape}")
    scale = max(1.0, float(np.abs(K).max()))
    if float(np.abs(K - K.T).max()) > tol * scale:
        raise ValueError("psd_check needs a symmetric matrix")
    w = np.linalg.eigvalsh(K)
    threshold = tol * max(1.0, float(w[-1])) if relative else tol
    return PsdReport(bool(w[0] >= -threshold), float(w[0]))
