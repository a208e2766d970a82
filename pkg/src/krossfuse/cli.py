"""Command-line surface: fuse, kernel, cluster, probe, validate, synth, sweep.

Exit codes: 0 on success, 1 when a validation criterion or computation fails,
2 for usage errors and malformed input files. Every command is a pure
function of its flags plus the seed; rerunning one writes byte-identical
outputs regardless of thread count.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from contextlib import nullcontext

import numpy as np

from . import rng
from .core import FusionConfig, KernelSpec, kernel_eval, kernel_matrix, psd_check
from .exact import FusionSizeError, krossfuse_missing, krossfuse_shared, product_fuse_gram
from .fuse import fuse as fuse_dispatch
from .io import MatrixFormatError, read_labels, read_matrix, write_labels, write_matrix


def build_parser():
    parser = argparse.ArgumentParser(
        prog="krossfuse",
        description="Fuse a cross-modal embedding with a uni-modal embedding via product kernels.",
    )
    parser.add_argument(
        "--threads",
        type=int,
        default=None,
        help="cap BLAS parallelism (also via KROSSFUSE_THREADS); output is identical either way",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="fuse embedding files into a fused embedding file")
    p.add_argument("--method", required=True, choices=("exact", "rp", "rff", "kpomrp"))
    p.add_argument("--cross", required=True, help="cross-modal embeddings for shared-modality rows")
    p.add_argument("--uni", required=True, help="uni-modal embeddings, row-aligned with --cross")
    p.add_argument("--missing", help="cross-modal embeddings for rows without uni-modal coverage")
    p.add_argument("--C", type=float, default=1.0)
    p.add_argument("--l", type=int, default=4096, help="projection dimension (rp, kpomrp)")
    p.add_argument("--r", type=int, default=2048, help="frequency count (rff)")
    p.add_argument(
        "--kernel",
        action="append",
        default=None,
        help="kernel spec (linear, cosine, rbf:<B>, rbf:median); give once for both embeddings "
        "or twice as cross-modal then uni-modal",
    )
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--cap", type=int, default=None, help="element cap override for exact/kpomrp outputs")
    p.add_argument("--out", required=True)
    p.add_argument("--out-missing", help="output path for the missing branch (required with --missing)")
    p.set_defaults(func=cmd_fuse)

    p = sub.add_parser("kernel", help="compute a kernel matrix from an embedding file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--kernel", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--heatmap", help="also write <base>.csv and <base>.pgm of the matrix")
    p.set_defaults(func=cmd_kernel)

    p = sub.add_parser("cluster", help="spectral-cluster a Gram matrix and score against labels")
    p.add_argument("--gram", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--labels", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--assignments-out", help="optionally write the cluster assignments")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("probe", help="closed-form ridge probe accuracy")
    p.add_argument("--train", required=True)
    p.add_argument("--train-labels", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--test-labels", required=True)
    p.add_argument("--lambda", dest="lam", type=float, default=1e-3)
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("validate", help="run a built-in validation harness")
    p.add_argument("target", choices=("thm1", "thm2", "prop2", "schur"))
    p.add_argument("--n", type=int, default=32)
    p.add_argument("--l", type=int, action="append", default=None, help="projection grid (repeatable)")
    p.add_argument("--r", type=int, action="append", default=None, help="frequency grid (repeatable)")
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--seeds", type=int, default=None)
    p.add_argument("--instances", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("synth", help="write the two-factor synthetic benchmark")
    p.add_argument("--n-per-cell", type=int, default=50)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out-a", required=True)
    p.add_argument("--out-b", required=True)
    p.add_argument("--out-labels", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("sweep", help="ablation sweep on the synthetic benchmark, CSV output")
    p.add_argument("--ablation", required=True, choices=("l", "C", "kernel"))
    p.add_argument("--out", required=True)
    p.add_argument("--n-per-cell", type=int, default=25)
    p.add_argument("--noise", type=float, default=0.3)
    p.add_argument("--d", type=int, default=16)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_sweep)

    return parser


def _resolve_threads(args):
    if args.threads is not None:
        if args.threads < 1:
            raise ValueError(f"--threads must be a positive integer, got {args.threads}")
        return args.threads
    env = os.environ.get("KROSSFUSE_THREADS", "").strip()
    if env:
        try:
            val = int(env)
        except ValueError:
            raise ValueError(f"KROSSFUSE_THREADS must be an integer, got {env!r}") from None
        if val < 1:
            raise ValueError(f"KROSSFUSE_THREADS must be positive, got {val}")
        return val
    return None


def cmd_fuse(args):
    kern_specs = [KernelSpec.parse(s) for s in (args.kernel or ["linear"])]
    config = FusionConfig(C=args.C, l=args.l, r=args.r, seed=args.seed, kernels=tuple(kern_specs))
    cross = read_matrix(args.cross)
    uni = read_matrix(args.uni)
    missing = read_matrix(args.missing) if args.missing else None
    if missing is not None and not args.out_missing:
        raise ValueError("--out-missing is required when --missing is given")
    kwargs = {}
    if args.method in ("exact", "kpomrp") and args.cap is not None:
        kwargs["cap"] = args.cap
    shared, fused_missing = fuse_dispatch(
        args.method, cross, uni, config, cross_missing=missing, **kwargs
    )
    write_matrix(shared.matrix, args.out)
    _write_provenance(shared, args.out)
    print(f"wrote {args.out} ({shared.matrix.n} x {shared.matrix.dim})")
    if fused_missing is not None:
        write_matrix(fused_missing.matrix, args.out_missing)
        _write_provenance(fused_missing, args.out_missing)
        print(f"wrote {args.out_missing} ({fused_missing.matrix.n} x {fused_missing.matrix.dim})")
    print(f"method {shared.method} seed {shared.seed} config {shared.config_digest}")
    return 0


def _write_provenance(fused, out_path):
    payload = {
        "method": fused.method,
        "seed": fused.seed,
        "config_digest": fused.config_digest,
        "rows": fused.matrix.n,
        "cols": fused.matrix.dim,
        "modality": fused.matrix.modality,
    }
    with open(str(out_path) + ".json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2)
        fh.write("\n")


def cmd_kernel(args):
    spec = KernelSpec.parse(args.kernel)
    E = read_matrix(args.infile)
    K = kernel_matrix(spec, E)
    write_matrix(K, args.out)
    print(f"wrote {args.out} ({K.shape[0]} x {K.shape[1]})")
    if args.heatmap:
        from .evaluation import heatmap_export

        csv_path, pgm_path = heatmap_export(K, args.heatmap)
        print(f"wrote {csv_path} and {pgm_path}")
    return 0


def cmd_cluster(args):
    from .evaluation import cluster_and_score

    K = read_matrix(args.gram).data
    labels = read_labels(args.labels)
    report = cluster_and_score(K, args.k, labels, args.seed)
    if args.assignments_out:
        write_labels(report.assignments, args.assignments_out)
    print(f"nmi {report.nmi:.6f}")
    print(f"ami {report.ami:.6f}")
    print(f"ari {report.ari:.6f}")
    return 0


def cmd_probe(args):
    from .evaluation import LabeledEmbeddings, ridge_probe

    train = LabeledEmbeddings((read_matrix(args.train),), read_labels(args.train_labels))
    test = LabeledEmbeddings((read_matrix(args.test),), read_labels(args.test_labels))
    acc = ridge_probe(train, test, args.lam)
    print(f"accuracy {acc:.6f}")
    return 0


def cmd_validate(args):
    if args.target == "thm1":
        from .evaluation import thm1_harness

        report = thm1_harness(
            n=args.n,
            l_grid=tuple(args.l) if args.l else (2048, 4096),
            delta=args.delta,
            seeds=args.seeds if args.seeds else 200,
            seed=args.seed,
        )
    elif args.target == "thm2":
        from .evaluation import thm2_harness

        report = thm2_harness(
            r_grid=tuple(args.r) if args.r else (500, 2000),
            delta=args.delta,
            seeds=args.seeds if args.seeds else 500,
            seed=args.seed,
        )
    elif args.target == "prop2":
        return _validate_prop2(args.instances, args.seed)
    else:
        return _validate_schur(args.instances, args.seed)
    for line in report.lines():
        print(line)
    return 0 if report.passed else 1


def _validate_prop2(instances, seed):
    """Check the three exact inner-product identities on random instances."""
    g = rng.stream(seed, rng.DOMAIN_HARNESS, 2)
    kinds = (KernelSpec("linear"), KernelSpec("cosine"))
    worst = 0.0
    for i in range(instances):
        C = (0.1, 1.0, 10.0)[i % 3]
        cross_spec = kinds[i % 2]
        uni_spec = kinds[(i // 2) % 2]
        d1 = int(g.integers(1, 9))
        d2 = int(g.integers(1, 9))
        x, xp, t, tp = g.standard_normal((4, d1))
        y, yp = g.standard_normal((2, d2))
        from .core import finite_feature

        fx, fxp, ft, ftp = (finite_feature(cross_spec, v) for v in (x, xp, t, tp))
        gy, gyp = (finite_feature(uni_spec, v) for v in (y, yp))
        EX = krossfuse_shared(fx, gy, C)
        EXp = krossfuse_shared(fxp, gyp, C)
        ET = krossfuse_missing(ft, C, d2)
        ETp = krossfuse_missing(ftp, C, d2)
        k_xx = kernel_eval(cross_spec, x, xp)
        k_tt = kernel_eval(cross_spec, t, tp)
        k_xt = kernel_eval(cross_spec, x, t)
        k_yy = kernel_eval(uni_spec, y, yp)
        worst = max(
            worst,
            abs(float(EX @ EXp) - k_xx * (C + k_yy)),
            abs(float(ET @ ETp) - C * k_tt),
            abs(float(EX @ ET) - C * k_xt),
        )
    ok = worst <= 1e-12
    print(f"{'PASS' if ok else 'FAIL'} prop2: {instances} instances, worst deviation {worst:.3e} "
          f"(tolerance 1e-12)")
    return 0 if ok else 1


def _validate_schur(instances, seed):
    """Check that elementwise products of kernel matrices stay positive semi-definite."""
    g = rng.stream(seed, rng.DOMAIN_HARNESS, 3)
    specs = (KernelSpec("linear"), KernelSpec("cosine"), KernelSpec("rbf", 2.0))
    worst = np.inf
    ok = True
    for i in range(instances):
        n = int(g.integers(2, 17))
        d = int(g.integers(1, 7))
        K1 = kernel_matrix(specs[i % 3], g.standard_normal((n, d)))
        K2 = kernel_matrix(specs[(i + 1) % 3], g.standard_normal((n, d)))
        report = psd_check(K1 * K2, 1e-8)
        worst = min(worst, report.min_eigenvalue)
        ok = ok and report.ok
    print(f"{'PASS' if ok else 'FAIL'} schur: {instances} instances, smallest eigenvalue {worst:.3e}")
    return 0 if ok else 1


def cmd_synth(args):
    from .evaluation import synth_factorial

    data = synth_factorial(args.n_per_cell, args.noise, args.d, args.seed)
    write_matrix(data.matrices[0], args.out_a)
    write_matrix(data.matrices[1], args.out_b)
    write_labels(data.labels, args.out_labels)
    print(f"wrote {args.out_a}, {args.out_b}, {args.out_labels} ({data.n} rows)")
    return 0


def cmd_sweep(args):
    from .evaluation import ari, spectral_cluster, synth_factorial

    data = synth_factorial(args.n_per_cell, args.noise, args.d, args.seed)
    A = data.matrices[0].data
    B = data.matrices[1].data
    labels = data.labels
    median = KernelSpec("rbf", None)

    def ari_of(K):
        return ari(spectral_cluster(K, 4, args.seed), labels)

    rows = [("ablation", "value", "ari_fused", "ari_a", "ari_b", "rms_dev")]
    if args.ablation == "kernel":
        for spec_text in ("linear", "cosine", "rbf:median"):
            spec = KernelSpec.parse(spec_text)
            KA = kernel_matrix(spec, A)
            KB = kernel_matrix(spec, B)
            fused = product_fuse_gram(KA, KB, 1.0)
            rows.append(("kernel", spec_text, ari_of(fused), ari_of(KA), ari_of(KB), ""))
    elif args.ablation == "C":
        KA = kernel_matrix(median, A)
        KB = kernel_matrix(median, B)
        a_a, a_b = ari_of(KA), ari_of(KB)
        for p in range(-3, 4):
            C = 10.0**p
            rows.append(("C", f"{C:g}", ari_of(product_fuse_gram(KA, KB, C)), a_a, a_b, ""))
    else:
        from .rp import rp_krossfuse_shared, sample_basis

        exact = (A @ A.T) * (1.0 + B @ B.T)
        KA = A @ A.T
        KB = B @ B.T
        a_a, a_b = ari_of(KA), ari_of(KB)
        for l in (64, 256, 1024, 4096):
            basis = sample_basis((A.shape[1], 2 * B.shape[1]), l, args.seed)
            Z = rp_krossfuse_shared(A, B, 1.0, basis)
            G = Z @ Z.T
            rms = float(np.sqrt(np.mean((G - exact) ** 2)))
            rows.append(("l", str(l), ari_of(G), a_a, a_b, f"{rms:.6g}"))
    with open(args.out, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(",".join(_fmt_cell(c) for c in row) + "\n")
    print(f"wrote {args.out} ({len(rows) - 1} rows)")
    return 0


def _fmt_cell(c):
    if isinstance(c, float):
        return f"{c:.6f}"
    return str(c)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse prints its own message; unknown flags and bad usage exit 2
        return int(exc.code) if exc.code is not None else 0
    try:
        threads = _resolve_threads(args)
        if threads is not None:
            from threadpoolctl import threadpool_limits

            limiter = threadpool_limits(limits=threads)
        else:
            limiter = nullcontext()
        with limiter:
            return int(args.func(args) or 0)
    except MatrixFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FusionSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
