import struct

import numpy as np
import numpy.testing as npt
import pytest

from kf_extractors.writers import format_for, write_kfmx, write_matrix_atomic, write_npy


class TestKfmxLayout:
    def test_header_and_payload_bytes(self, tmp_path):
        """22-byte little-endian header, then row-major float64 payload."""
        arr = np.array([[1.5, -2.0], [0.25, 3.0]])
        path = tmp_path / "m.kfmx"
        write_kfmx(arr, path)
        blob = path.read_bytes()
        magic, version, dtype_code, rows, cols = struct.unpack_from("<4sBBQQ", blob)
        assert magic == b"KFMX"
        assert version == 1
        assert dtype_code == 1
        assert (rows, cols) == (2, 2)
        assert blob[22:] == arr.astype("<f8").tobytes(order="C")

    def test_rejects_non_2d(self, tmp_path):
        with pytest.raises(ValueError, match="2-D"):
            write_kfmx(np.arange(3.0), tmp_path / "m.kfmx")


class TestNpy:
    def test_version_1_0_and_round_trip(self, tmp_path):
        arr = np.linspace(0.0, 1.0, 12).reshape(3, 4)
        path = tmp_path / "m.npy"
        write_npy(arr, path)
        assert path.read_bytes()[:8] == b"\x93NUMPY\x01\x00"
        npt.assert_array_equal(np.load(path), arr)

    def test_float32_input_widened(self, tmp_path):
        path = tmp_path / "m.npy"
        write_npy(np.ones((2, 2), dtype=np.float32), path)
        assert np.load(path).dtype == np.float64


class TestAtomicWrite:
    def test_suffix_routing(self):
        assert format_for("a.npy") == "npy"
        assert format_for("a.NPY") == "npy"
        assert format_for("a.kfmx") == "kfmx"
        assert format_for("a") == "kfmx"

    def test_round_trip(self, tmp_path):
        arr = np.arange(6.0).reshape(2, 3)
        path = tmp_path / "m.kfmx"
        write_matrix_atomic(arr, path)
        blob = path.read_bytes()
        npt.assert_array_equal(
            np.frombuffer(blob[22:]).reshape(2, 3), arr
        )

    def test_overwrites_existing_file_completely(self, tmp_path):
        path = tmp_path / "m.npy"
        write_matrix_atomic(np.zeros((8, 8)), path)
        write_matrix_atomic(np.ones((2, 2)), path)
        npt.assert_array_equal(np.load(path), np.ones((2, 2)))

    def test_failure_leaves_no_files(self, tmp_path):
        with pytest.raises(ValueError):
            write_matrix_atomic(np.arange(3.0), tmp_path / "m.kfmx")
        assert list(tmp_path.iterdir()) == []
