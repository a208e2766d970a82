"""Command-line entry point: run one manifest, print what was written.

Exit codes follow the fusion CLI's convention: 0 on success, 1 when the
extraction itself fails (unknown model, unreadable sample, normalization of
a zero row), 2 for usage errors and bad inputs (malformed manifest, missing
manifest or dataset files).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .extract import extract
from .encoders import ExtractionError
from .manifest import ManifestError, load_manifest


def build_parser():
    parser = argparse.ArgumentParser(
        prog="kf-extract",
        description="run pretrained or built-in encoders over a dataset and "
        "write the embeddings as a KFMX or .npy matrix file",
    )
    parser.add_argument("--manifest", required=True, help="extraction manifest JSON file")
    parser.add_argument(
        "--normalize",
        action="store_true",
        help="unit-normalize every output row, overriding the manifest flag",
    )
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if exc.code is not None else 0
    try:
        manifest = load_manifest(args.manifest)
        if args.normalize:
            manifest = replace(manifest, normalize=True)
        result = extract(manifest)
    except (ManifestError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ExtractionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"wrote {result.path} ({result.rows} x {result.cols})")
    return 0


if __name__ == "__main__":
    sys.exit(main())
