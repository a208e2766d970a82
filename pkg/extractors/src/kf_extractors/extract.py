"""Run one extraction job end to end: dataset -> encoder -> matrix file.

Row order is the dataset order: for a directory of images, filenames sorted
lexicographically; for a list file, the order of its lines; for a text
dataset, the order of its lines. The output row count always equals the
input sample count, and the file appears only after the whole matrix is
written (no partial output on failure).
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from PIL import Image

from .encoders import ExtractionError, build_encoder
from .writers import write_matrix_atomic

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg", ".bmp", ".gif", ".tif", ".tiff", ".webp")


@dataclass(frozen=True)
class ExtractionResult:
    path: str
    rows: int
    cols: int


def list_image_files(dataset):
    """Resolve an image dataset path to an ordered list of image files.

    A directory yields its image files sorted by name. A plain file is read
    as a newline-separated list of image paths, kept in listed order, with
    relative entries resolved against the list file's directory.
    """
    if os.path.isdir(dataset):
        names = sorted(
            name
            for name in os.listdir(dataset)
            if os.path.splitext(name)[1].lower() in IMAGE_SUFFIXES
        )
        if not names:
            raise ExtractionError(f"dataset directory contains no image files: {dataset}")
        return [os.path.join(dataset, name) for name in names]
    if os.path.isfile(dataset):
        base = os.path.dirname(os.path.abspath(dataset))
        with open(dataset, "r", encoding="utf-8") as fh:
            entries = [line.strip() for line in fh if line.strip()]
        if not entries:
            raise ExtractionError(f"dataset list file names no images: {dataset}")
        paths = [e if os.path.isabs(e) else os.path.join(base, e) for e in entries]
        for p in paths:
            if not os.path.isfile(p):
                raise FileNotFoundError(f"dataset list entry does not exist: {p}")
        return paths
    raise FileNotFoundError(f"dataset path does not exist: {dataset}")


def load_text_lines(dataset):
    """Read a text dataset: one sample per line, blank lines kept as samples."""
    if os.path.isdir(dataset):
        raise ExtractionError(f"text dataset must be a file, not a directory: {dataset}")
    if not os.path.isfile(dataset):
        raise FileNotFoundError(f"dataset path does not exist: {dataset}")
    with open(dataset, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise ExtractionError(f"text dataset contains no lines: {dataset}")
    return lines


def _open_image(path):
    # convert() forces the full decode inside the with block, so corrupt
    # files fail here with a named path instead of inside the encoder.
    try:
        with Image.open(path) as img:
            return img.convert("RGB")
    except OSError as exc:
        raise ExtractionError(f"cannot read image file {path}: {exc}") from None


def _batches(items, size):
    for start in range(0, len(items), size):
        yield items[start : start + size]


def extract(manifest):
    """Execute an ExtractionManifest and return the written file's summary.

    Raises ManifestError indirectly for bad manifests (at load time),
    FileNotFoundError for missing datasets, and ExtractionError for unknown
    models, unreadable samples, encoder failures, and rows that cannot be
    normalized. On any failure the output path is left untouched.
    """
    encoder = build_encoder(manifest.model, manifest.device, manifest.options)
    if encoder.modality != manifest.modality:
        raise ExtractionError(
            f"model {manifest.model} expects {encoder.modality} data "
            f"but the manifest says {manifest.modality!r}"
        )
    out_dir = os.path.dirname(os.path.abspath(manifest.output))
    if not os.path.isdir(out_dir):
        raise FileNotFoundError(f"output directory does not exist: {out_dir}")
    if manifest.modality == "image":
        items = list_image_files(manifest.dataset)
    else:
        items = load_text_lines(manifest.dataset)

    blocks = []
    for batch in _batches(items, manifest.batch_size):
        samples = [_open_image(p) for p in batch] if manifest.modality == "image" else batch
        block = np.asarray(encoder.encode_batch(samples), dtype=np.float64)
        if block.ndim != 2 or block.shape[0] != len(batch):
            raise ExtractionError(
                f"encoder {manifest.model} returned shape {block.shape} "
                f"for a batch of {len(batch)} samples"
            )
        blocks.append(block)
    E = np.vstack(blocks)
    if E.shape[0] != len(items):
        raise ExtractionError(
            f"extraction produced {E.shape[0]} rows for {len(items)} samples"
        )

    if manifest.normalize:
        norms = np.linalg.norm(E, axis=1)
        dead = np.flatnonzero(norms == 0.0)
        if dead.size:
            raise ExtractionError(
                f"cannot normalize: row {dead[0]} (sample "
                f"{items[dead[0]]!r}) has zero norm"
            )
        E = E / norms[:, None]

    write_matrix_atomic(E, manifest.output)
    return ExtractionResult(str(manifest.output), E.shape[0], E.shape[1])
