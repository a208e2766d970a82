"""Output writers for the two interchange formats the fusion CLI reads.

KFMX layout, little-endian throughout:

    bytes 0..3   magic "KFMX"
    byte  4      format version, currently 1
    byte  5      dtype code: 0 = float32, 1 = float64
    bytes 6..13  rows, unsigned 64-bit
    bytes 14..21 cols, unsigned 64-bit
    bytes 22..   payload, rows * cols values, row-major

.npy output is version 1.0, C-order, 2-D, little-endian float64. Everything
is written through `write_matrix_atomic`, which stages the bytes in a
temporary file beside the target and renames it into place, so a failed or
interrupted extraction leaves no partial output behind.
"""

from __future__ import annotations

import os
import struct

import numpy as np

KFMX_MAGIC = b"KFMX"
_KFMX_HEADER = struct.Struct("<4sBBQQ")


def _as_2d_float64(data):
    arr = np.ascontiguousarray(data, dtype="<f8")
    if arr.ndim != 2:
        raise ValueError(f"matrix payload must be 2-D, got shape {arr.shape}")
    return arr


def write_kfmx(data, path):
    arr = _as_2d_float64(data)
    header = _KFMX_HEADER.pack(KFMX_MAGIC, 1, 1, arr.shape[0], arr.shape[1])
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(arr.tobytes(order="C"))
    return path


def write_npy(data, path):
    arr = _as_2d_float64(data)
    with open(path, "wb") as fh:
        np.lib.format.write_array(fh, arr, version=(1, 0))
    return path


def format_for(path):
    """Pick the output format from the suffix: .npy writes .npy, all else KFMX."""
    if os.path.splitext(str(path))[1].lower() == ".npy":
        return "npy"
    return "kfmx"


def write_matrix_atomic(data, path):
    """Write a matrix to `path` in the suffix-selected format, atomically.

    The payload goes to `<path>.tmp.<pid>` first and is renamed over the
    target only once fully written. Any failure removes the temporary file
    and leaves the target untouched.
    """
    writer = write_npy if format_for(path) == "npy" else write_kfmx
    tmp = f"{path}.tmp.{os.getpid()}"
    try:
        writer(data, tmp)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path
