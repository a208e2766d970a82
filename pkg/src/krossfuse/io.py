"""Matrix file formats: native KFMX, a .npy subset, and headerless CSV.

KFMX layout, little-endian throughout:

    bytes 0..3   magic "KFMX"
    byte  4      format version, currently 1
    byte  5      dtype code: 0 = float32, 1 = float64
    bytes 6..13  rows, unsigned 64-bit
    bytes 14..21 cols, unsigned 64-bit
    bytes 22..   payload, rows * cols values, row-major

.npy support is deliberately the version 1.0, C-order, 2-D, little-endian
float subset. CSV is headerless comma-separated reals written with 17
significant digits, which round-trips float64 exactly.
"""

from __future__ import annotations

import ast
import os
import struct

import numpy as np

from .core import EmbeddingMatrix, as_matrix

KFMX_MAGIC = b"KFMX"
NPY_MAGIC = b"\x93NUMPY"
_KFMX_HEADER = struct.Struct("<4sBBQQ")
_DTYPE_CODES = {0: np.dtype("<f4"), 1: np.dtype("<f8")}

FORMATS = ("kfmx", "npy", "csv")


class MatrixFormatError(ValueError):
    """Raised for malformed or unsupported matrix files."""


def _infer_format(path):
    ext = os.path.splitext(str(path))[1].lower()
    if ext == ".npy":
        return "npy"
    if ext == ".csv":
        return "csv"
    return "kfmx"


def write_matrix(E, path, format=None):
    """Write a matrix (or EmbeddingMatrix) to disk; format inferred from the suffix.

    KFMX and .npy are bit-exact round trips; CSV uses 17 significant digits.
    Returns the path written.
    """
    data = E.data if isinstance(E, EmbeddingMatrix) else as_matrix(E)
    fmt = format or _infer_format(path)
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {format!r}; expected one of {FORMATS}")
    if fmt == "kfmx":
        header = _KFMX_HEADER.pack(KFMX_MAGIC, 1, 1, data.shape[0], data.shape[1])
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(data, dtype="<f8").tobytes(order="C"))
    elif fmt == "npy":
        with open(path, "wb") as fh:
            np.lib.format.write_array(fh, np.ascontiguousarray(data), version=(1, 0))
    else:
        np.savetxt(path, data, delimiter=",", fmt="%.17g")
    return path


def read_matrix(path, modality="shared", name=None):
    """Read a matrix file, auto-detecting KFMX, .npy (1.0 subset), or CSV."""
    try:
        with open(path, "rb") as fh:
            blob = fh.read()
    except FileNotFoundError:
        raise MatrixFormatError(f"matrix file does not exist: {path}") from None
    if len(blob) == 0:
        raise MatrixFormatError(f"matrix file is empty: {path}")
    if blob[:4] == KFMX_MAGIC:
        data = _parse_kfmx(blob, path)
    elif blob[: len(NPY_MAGIC)] == NPY_MAGIC:
        data = _parse_npy(blob, path)
    else:
        data = _parse_csv(blob, path)
    return EmbeddingMatrix(data, modality=modality, name=name if name is not None else str(path))


def _parse_kfmx(blob, path):
    if len(blob) < _KFMX_HEADER.size:
        raise MatrixFormatError(f"{path}: truncated KFMX header ({len(blob)} bytes)")
    magic, version, dtype_code, rows, cols = _KFMX_HEADER.unpack_from(blob)
    if version != 1:
        raise MatrixFormatError(f"{path}: unsupported KFMX version {version}; expected 1")
    if dtype_code not in _DTYPE_CODES:
        raise MatrixFormatError(
            f"{path}: unknown KFMX dtype code {dtype_code}; expected 0 (float32) or 1 (float64)"
        )
    if rows < 1 or cols < 1:
        raise MatrixFormatError(f"{path}: KFMX dimensions must be positive, got {rows} x {cols}")
    dtype = _DTYPE_CODES[dtype_code]
    expected = rows * cols * dtype.itemsize
    payload = blob[_KFMX_HEADER.size :]
    if len(payload) != expected:
        raise MatrixFormatError(
            f"{path}: KFMX payload length {len(payload)} does not match "
            f"rows x cols x itemsize = {expected}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(rows, cols)
    return data.astype(np.float64)


def _parse_npy(blob, path):
    if len(blob) < 10:
        raise MatrixFormatError(f"{path}: truncated .npy header")
    major, minor = blob[6], blob[7]
    if (major, minor) != (1, 0):
        raise MatrixFormatError(
            f"{path}: unsupported .npy version {major}.{minor}; only 1.0 is supported"
        )
    (hlen,) = struct.unpack_from("<H", blob, 8)
    header_end = 10 + hlen
    if len(blob) < header_end:
        raise MatrixFormatError(f"{path}: truncated .npy header")
    try:
        header = ast.literal_eval(blob[10:header_end].decode("latin-1").strip())
    except (ValueError, SyntaxError):
        raise MatrixFormatError(f"{path}: unparseable .npy header dictionary") from None
    descr = header.get("descr")
    if descr not in ("<f4", "<f8"):
        raise MatrixFormatError(
            f"{path}: unsupported .npy dtype {descr!r}; only little-endian float32/float64"
        )
    if header.get("fortran_order"):
        raise MatrixFormatError(f"{path}: column-major (Fortran-order) .npy unsupported")
    shape = header.get("shape")
    if not isinstance(shape, tuple) or len(shape) != 2:
        raise MatrixFormatError(f"{path}: .npy shape must be 2-D, got {shape!r}")
    dtype = np.dtype(descr)
    expected = int(shape[0]) * int(shape[1]) * dtype.itemsize
    payload = blob[header_end:]
    if len(payload) != expected:
        raise MatrixFormatError(
            f"{path}: .npy payload length {len(payload)} does not match shape {shape}"
        )
    data = np.frombuffer(payload, dtype=dtype).reshape(shape)
    return data.astype(np.float64)


def _parse_csv(blob, path):
    try:
        text = blob.decode("utf-8")
    except UnicodeDecodeError:
        raise MatrixFormatError(
            f"{path}: bad magic (not KFMX or .npy) and not decodable as CSV text"
        ) from None
    rows = []
    width = None
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        cells = [c.strip() for c in line.split(",")]
        if width is None:
            width = len(cells)
        elif len(cells) != width:
            raise MatrixFormatError(
                f"{path}: ragged CSV, line {lineno} has {len(cells)} values, expected {width}"
            )
        try:
            rows.append([float(c) for c in cells])
        except ValueError:
            raise MatrixFormatError(
                f"{path}: non-numeric CSV value on line {lineno}"
            ) from None
    if not rows:
        raise MatrixFormatError(f"{path}: CSV contains no data rows")
    return np.array(rows, dtype=np.float64)


def read_labels(path):
    """Read integer labels, one per line (or a single CSV column)."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise MatrixFormatError(f"labels file does not exist: {path}") from None
    except UnicodeDecodeError:
        raise MatrixFormatError(f"{path}: labels file is not UTF-8 text") from None
    values = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split(",")[0].strip()
        if not line:
            continue
        try:
            values.append(int(line))
        except ValueError:
            raise MatrixFormatError(
                f"{path}: non-integer label on line {lineno}: {line!r}"
            ) from None
    if not values:
        raise MatrixFormatError(f"{path}: labels file contains no labels")
    return np.array(values, dtype=np.int64)


def write_labels(labels, path):
    """Write integer labels, one per line."""
    arr = np.asarray(labels)
    with open(path, "w", encoding="utf-8") as fh:
        for v in arr.ravel():
            fh.write(f"{int(v)}\n")
    return path
