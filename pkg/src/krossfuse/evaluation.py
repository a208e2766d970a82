"""Evaluation and validation: clustering, linear probing, synthetic data, harnesses.

The concentration harnesses check the two probabilistic guarantees the
randomized paths advertise (projection Gram deviation and per-pair Fourier
feature error) against exact oracles, reporting per-size exceedance
fractions next to the theoretical bounds.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field

import numpy as np

from . import rng
from .core import EmbeddingMatrix, KernelSpec, as_matrix, kernel_eval
from .exact import symmetrize_rows
from .rff import rff_joint, sample_freqs_rbf_joint
from .rp import sample_basis


def _as_labels(y, n=None, name="labels"):
    arr = np.asarray(y)
    if arr.ndim != 1 or arr.size < 1:
        raise ValueError(f"{name} must be a non-empty 1-D integer array")
    if not np.issubdtype(arr.dtype, np.integer):
        cast = arr.astype(np.int64)
        if not np.array_equal(cast, arr):
            raise ValueError(f"{name} must be integers")
        arr = cast
    else:
        arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise ValueError(f"{name} must be non-negative class indices")
    if n is not None and arr.size != n:
        raise ValueError(f"{name} length {arr.size} does not match row count {n}")
    return arr


@dataclass
class LabeledEmbeddings:
    """One or more row-aligned embedding matrices plus an integer class per row."""

    matrices: tuple
    labels: np.ndarray

    def __post_init__(self):
        mats = self.matrices
        if isinstance(mats, (EmbeddingMatrix, np.ndarray, list)) and not isinstance(mats, tuple):
            mats = (mats,) if not isinstance(mats, list) else tuple(mats)
        if len(mats) == 0:
            raise ValueError("LabeledEmbeddings needs at least one matrix")
        coerced = tuple(m if isinstance(m, EmbeddingMatrix) else EmbeddingMatrix(m) for m in mats)
        n = coerced[0].n
        for m in coerced:
            if m.n != n:
                raise ValueError(f"all matrices must share the row count: {m.n} vs {n}")
        self.matrices = coerced
        self.labels = _as_labels(self.labels, n)

    @property
    def n(self):
        return self.matrices[0].n

    def stacked(self):
        """All embeddings concatenated column-wise into one feature matrix."""
        if len(self.matrices) == 1:
            return self.matrices[0].data
        return np.hstack([m.data for m in self.matrices])


@dataclass(frozen=True)
class ClusterReport:
    assignments: np.ndarray
    nmi: float
    ami: float
    ari: float


def _sq_dists_to(X, centers):
    x2 = np.einsum("ij,ij->i", X, X)
    c2 = np.einsum("ij,ij->i", centers, centers)
    return np.maximum(x2[:, None] + c2[None, :] - 2.0 * (X @ centers.T), 0.0)


def _kmeanspp_init(X, k, g):
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]))
    centers[0] = X[int(g.integers(n))]
    d2 = _sq_dists_to(X, centers[:1])[:, 0]
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            # every point coincides with a chosen center
            idx = int(g.integers(n))
        else:
            u = float(g.random()) * total
            idx = min(int(np.searchsorted(np.cumsum(d2), u, side="right")), n - 1)
        centers[j] = X[idx]
        d2 = np.minimum(d2, _sq_dists_to(X, centers[j : j + 1])[:, 0])
    return centers


def kmeans(X, k, seed, restarts=20, max_iter=300):
    """Plain Lloyd k-means with seeded k-means++ restarts, best inertia wins.

    Hand-rolled so the assignments are a pure function of (X, k, seed):
    restarts draw from counter-based streams and ties resolve to the first
    index, so nothing depends on thread count or library version.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if int(k) != k or not 1 <= int(k) <= n:
        raise ValueError(f"k must be an integer in [1, {n}], got {k!r}")
    k = int(k)
    best_assign = None
    best_inertia = np.inf
    for t in range(restarts):
        g = rng.stream(seed, rng.DOMAIN_KMEANS, t)
        centers = _kmeanspp_init(X, k, g)
        for _ in range(max_iter):
            assign = _sq_dists_to(X, centers).argmin(axis=1)
            new_centers = centers.copy()
            for j in range(k):
                members = X[assign == j]
                if members.shape[0]:
                    new_centers[j] = members.mean(axis=0)
            if np.array_equal(new_centers, centers):
                break
            centers = new_centers
        d2 = _sq_dists_to(X, centers)
        assign = d2.argmin(axis=1)
        inertia = float(d2[np.arange(n), assign].sum())
        if inertia < best_inertia:
            best_inertia = inertia
            best_assign = assign
    return best_assign


def spectral_cluster(K, k, seed):
    """Normalized-Laplacian spectral clustering.

    Scales K by D^(-1/2) on both sides, takes the k eigenvectors of largest
    eigenvalue, normalizes the embedding rows, and k-means clusters them
    (seeded, 20 restarts, best inertia).
    """
    K = as_matrix(K)
    n = K.shape[0]
    if K.shape[0] != K.shape[1]:
        raise ValueError(f"spectral_cluster needs a square matrix, got shape {K.shape}")
    scale = max(1.0, float(np.abs(K).max()))
    if float(np.abs(K - K.T).max()) > 1e-8 * scale:
        raise ValueError("spectral_cluster needs a symmetric matrix")
    if int(k) != k or not 2 <= int(k) <= n:
        raise ValueError(f"k must be an integer in [2, {n}], got {k!r}")
    k = int(k)
    deg = K.sum(axis=1)
    dh = 1.0 / np.sqrt(np.maximum(deg, np.finfo(np.float64).tiny))
    L = K * dh[:, None] * dh[None, :]
    _, V = np.linalg.eigh(L)
    V = V[:, -k:]
    norms = np.linalg.norm(V, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return kmeans(V / norms, k, seed)


def nmi(a, b):
    """Normalized mutual information, arithmetic-mean normalization, in [0, 1]."""
    a, b = _paired_partitions(a, b)
    from sklearn.metrics import normalized_mutual_info_score

    return float(normalized_mutual_info_score(a, b, average_method="arithmetic"))


def ami(a, b):
    """Adjusted mutual information (expected-MI correction), arithmetic normalization."""
    a, b = _paired_partitions(a, b)
    from sklearn.metrics import adjusted_mutual_info_score

    return float(adjusted_mutual_info_score(a, b, average_method="arithmetic"))


def ari(a, b):
    """Adjusted Rand index by pair counting, in [-1, 1]."""
    a, b = _paired_partitions(a, b)
    from sklearn.metrics import adjusted_rand_score

    return float(adjusted_rand_score(a, b))


def _paired_partitions(a, b):
    a = _as_labels(a, name="a")
    b = _as_labels(b, name="b")
    if a.size != b.size:
        raise ValueError(f"partition lengths differ: {a.size} vs {b.size}")
    return a, b


def cluster_and_score(K, k, labels, seed):
    """Spectral-cluster a Gram matrix and score the assignments against labels."""
    assignments = spectral_cluster(K, k, seed)
    labels = _as_labels(labels, len(assignments))
    return ClusterReport(
        assignments=assignments,
        nmi=nmi(assignments, labels),
        ami=ami(assignments, labels),
        ari=ari(assignments, labels),
    )


def ridge_probe(train, test, lam=1e-3):
    """One-vs-rest ridge probe solved in closed form; returns test accuracy.

    Fits W from the normal equations (X'X + lam I) W = X'Y on one-hot train
    labels and predicts by argmax. Classes absent from the training set are
    never predicted.
    """
    if not np.isfinite(lam) or lam <= 0:
        raise ValueError(f"lambda must be a positive finite real, got {lam!r}")
    Xtr = train.stacked()
    Xte = test.stacked()
    if Xtr.shape[1] != Xte.shape[1]:
        raise ValueError(
            f"train and test feature dimensions differ: {Xtr.shape[1]} vs {Xte.shape[1]}"
        )
    k = int(max(train.labels.max(), test.labels.max())) + 1
    Y = np.zeros((Xtr.shape[0], k))
    Y[np.arange(Xtr.shape[0]), train.labels] = 1.0
    A = Xtr.T @ Xtr + lam * np.eye(Xtr.shape[1])
    W = np.linalg.solve(A, Xtr.T @ Y)
    scores = Xte @ W
    present = np.bincount(train.labels, minlength=k) > 0
    scores[:, ~present] = -np.inf
    pred = scores.argmax(axis=1)
    return float((pred == test.labels).mean())


def synth_factorial(n_per_cell, noise, d, seed):
    """Two-factor synthetic benchmark: each embedding sees only one latent factor.

    Latent cells are (i, j) in {0,1} x {0,1} with 4-way label 2i + j. Factor A
    rows are unit-norm noisy copies of a code for i alone, factor B rows of a
    code for j alone, with codes drawn orthonormal per factor. Clustering
    either embedding can recover at most its own binary factor; recovering all
    four cells requires both.
    """
    if int(n_per_cell) != n_per_cell or int(n_per_cell) < 2:
        raise ValueError(f"n_per_cell must be an integer >= 2, got {n_per_cell!r}")
    if int(d) != d or int(d) < 2:
        raise ValueError(f"d must be an integer >= 2, got {d!r}")
    noise = float(noise)
    if not np.isfinite(noise) or noise < 0:
        raise ValueError(f"noise must be a non-negative finite real, got {noise!r}")
    n_per_cell, d = int(n_per_cell), int(d)
    g = rng.stream(seed, rng.DOMAIN_DATA, 0)

    def draw_codes():
        q, _ = np.linalg.qr(g.standard_normal((d, 2)))
        return q.T

    codes_a = draw_codes()
    codes_b = draw_codes()
    ii = np.repeat([0, 0, 1, 1], n_per_cell)
    jj = np.repeat([0, 1, 0, 1], n_per_cell)
    n = 4 * n_per_cell
    A = codes_a[ii] + noise * g.standard_normal((n, d)) / np.sqrt(d)
    B = codes_b[jj] + noise * g.standard_normal((n, d)) / np.sqrt(d)
    A /= np.linalg.norm(A, axis=1, keepdims=True)
    B /= np.linalg.norm(B, axis=1, keepdims=True)
    return LabeledEmbeddings(
        (
            EmbeddingMatrix(A, "shared", "factor-a"),
            EmbeddingMatrix(B, "shared", "factor-b"),
        ),
        2 * ii + jj,
    )


def select_C(fuse_fn, labels, grid=None, folds=3, lam=1e-3, seed=0):
    """Pick C from a grid by cross-validated ridge-probe accuracy.

    ``fuse_fn(C)`` must return the fused feature matrix for the labeled rows.
    Ties resolve to the smallest C. Default grid is 10^-3 through 10^3.
    """
    labels = _as_labels(labels)
    n = labels.size
    if grid is None:
        grid = tuple(10.0**p for p in range(-3, 4))
    if int(folds) != folds or not 2 <= int(folds) <= n:
        raise ValueError(f"folds must be an integer in [2, {n}], got {folds!r}")
    folds = int(folds)
    perm = rng.stream(seed, rng.DOMAIN_DATA, 1).permutation(n)
    chunks = np.array_split(perm, folds)
    best_C, best_acc = None, -np.inf
    for C in grid:
        X = as_matrix(fuse_fn(C))
        if X.shape[0] != n:
            raise ValueError(f"fuse_fn returned {X.shape[0]} rows for {n} labels")
        accs = []
        for held in range(folds):
            te = chunks[held]
            tr = np.concatenate([chunks[j] for j in range(folds) if j != held])
            accs.append(
                ridge_probe(
                    LabeledEmbeddings((X[tr],), labels[tr]),
                    LabeledEmbeddings((X[te],), labels[te]),
                    lam,
                )
            )
        acc = float(np.mean(accs))
        if acc > best_acc:
            best_C, best_acc = float(C), acc
    return best_C, best_acc


@dataclass(frozen=True)
class BoundRow:
    """Exceedance statistics for one projection or frequency count."""

    size: int
    bound: float
    exceed_fraction: float
    mean_max_dev: float
    mean_rms_dev: float


@dataclass(frozen=True)
class HarnessReport:
    """Per-size exceedance rows plus the pass verdict at delta + slack."""

    name: str
    delta: float
    seeds: int
    rows: tuple
    slack: float = 0.03
    params: dict = field(default_factory=dict)

    @property
    def passed(self):
        allowed = self.delta + self.slack
        return all(row.exceed_fraction <= allowed for row in self.rows)

    def lines(self):
        allowed = self.delta + self.slack
        out = [
            f"{self.name}: delta={self.delta:g} seeds={self.seeds} "
            f"allowed_exceedance={allowed:g}"
        ]
        for row in self.rows:
            verdict = "PASS" if row.exceed_fraction <= allowed else "FAIL"
            out.append(
                f"{verdict} {self.name} size={row.size} bound={row.bound:.6f} "
                f"exceedance={row.exceed_fraction:.4f} mean_max_dev={row.mean_max_dev:.6f} "
                f"mean_rms_dev={row.mean_rms_dev:.6f}"
            )
        return out

    def to_csv(self):
        lines = ["size,bound,exceed_fraction,mean_max_dev,mean_rms_dev"]
        for row in self.rows:
            lines.append(
                f"{row.size},{row.bound:.17g},{row.exceed_fraction:.17g},"
                f"{row.mean_max_dev:.17g},{row.mean_rms_dev:.17g}"
            )
        return "\n".join(lines) + "\n"


def thm1_harness(n=32, l_grid=(2048, 4096), delta=0.05, seeds=200, d_cross=8, d_uni=8, C=1.0, seed=0):
    """Projection-Gram deviation harness against the exact fused Gram.

    Draws one batch of unit-norm cross-modal feature rows and unit-norm
    symmetrized uni-modal rows (so every exact kernel value is bounded by
    B = 1), then for each l measures the max pairwise deviation of the
    projected Gram over independent bases and compares against
    sqrt(B log(4n/delta) / l).
    """
    if int(n) != n or int(n) < 2:
        raise ValueError(f"n must be an integer >= 2, got {n!r}")
    n = int(n)
    g = rng.stream(seed, rng.DOMAIN_HARNESS, 0)
    Psi = g.standard_normal((n, int(d_cross)))
    Psi /= np.linalg.norm(Psi, axis=1, keepdims=True)
    Gamma = g.standard_normal((n, int(d_uni)))
    Gamma /= np.linalg.norm(Gamma, axis=1, keepdims=True)
    S = symmetrize_rows(Gamma, C)
    S /= np.linalg.norm(S, axis=1, keepdims=True)
    exact = (Psi @ Psi.T) * (S @ S.T)
    rows = []
    for l in l_grid:
        l = int(l)
        bound = float(np.sqrt(np.log(4 * n / delta) / l))
        max_devs = np.empty(seeds)
        rms_devs = np.empty(seeds)
        for t in range(seeds):
            basis = sample_basis((Psi.shape[1], S.shape[1]), l, t)
            Z = (Psi @ basis.matrices[0]) * (S @ basis.matrices[1]) / np.sqrt(l)
            dev = np.abs(Z @ Z.T - exact)
            max_devs[t] = dev.max()
            rms_devs[t] = np.sqrt(np.mean(dev**2))
        rows.append(
            BoundRow(
                size=l,
                bound=bound,
                exceed_fraction=float(np.mean(max_devs > bound)),
                mean_max_dev=float(max_devs.mean()),
                mean_rms_dev=float(rms_devs.mean()),
            )
        )
    return HarnessReport(
        name="thm1",
        delta=float(delta),
        seeds=int(seeds),
        rows=tuple(rows),
        params={"n": n, "d_cross": int(d_cross), "d_uni": int(d_uni), "C": float(C), "seed": int(seed)},
    )


def thm2_harness(r_grid=(500, 2000), delta=0.05, seeds=500, d=4, seed=0):
    """Per-pair joint-feature error harness against the exact product kernel.

    Each trial draws a fresh input pair and frequency set, and measures
    |estimate - k1 k2| for the joint map against sqrt(2 log(2/delta) / r).
    """
    if int(d) != d or int(d) < 1:
        raise ValueError(f"d must be a positive integer, got {d!r}")
    d = int(d)
    B1 = B2 = 2.0 * d
    k1 = KernelSpec("rbf", B1)
    k2 = KernelSpec("rbf", B2)
    g = rng.stream(seed, rng.DOMAIN_HARNESS, 1)
    rows = []
    for r in r_grid:
        r = int(r)
        bound = float(np.sqrt(2.0 * np.log(2.0 / delta) / r))
        devs = np.empty(seeds)
        for t in range(seeds):
            z1, z1p = g.standard_normal((2, d))
            z2, z2p = g.standard_normal((2, d))
            freqs = sample_freqs_rbf_joint(d, B1, d, B2, r, t)
            est = float(rff_joint(z1, z2, freqs) @ rff_joint(z1p, z2p, freqs))
            target = kernel_eval(k1, z1, z1p) * kernel_eval(k2, z2, z2p)
            devs[t] = abs(est - target)
        rows.append(
            BoundRow(
                size=r,
                bound=bound,
                exceed_fraction=float(np.mean(devs > bound)),
                mean_max_dev=float(devs.max()),
                mean_rms_dev=float(np.sqrt(np.mean(devs**2))),
            )
        )
    return HarnessReport(
        name="thm2",
        delta=float(delta),
        seeds=int(seeds),
        rows=tuple(rows),
        params={"d": d, "seed": int(seed)},
    )


def heatmap_export(K, path):
    """Write a matrix as CSV plus an 8-bit grayscale PGM (min-max normalized).

    ``path`` may carry a .csv or .pgm suffix or none; both files are written
    next to each other with the respective suffixes. A constant matrix maps to
    all-zero pixels. Returns (csv_path, pgm_path).
    """
    K = as_matrix(K)
    base, ext = os.path.splitext(str(path))
    if ext.lower() not in (".csv", ".pgm", ""):
        base = str(path)
    csv_path = base + ".csv"
    pgm_path = base + ".pgm"
    np.savetxt(csv_path, K, delimiter=",", fmt="%.17g")
    lo = float(K.min())
    hi = float(K.max())
    if hi > lo:
        pixels = np.rint((K - lo) / (hi - lo) * 255.0).astype(np.uint8)
    else:
        pixels = np.zeros(K.shape, dtype=np.uint8)
    header = f"P5\n{K.shape[1]} {K.shape[0]}\n255\n".encode("ascii")
    with open(pgm_path, "wb") as fh:
        fh.write(header)
        fh.write(pixels.tobytes(order="C"))
    return csv_path, pgm_path
