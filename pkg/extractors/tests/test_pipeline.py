"""Cross-component checks against the fusion package.

These tests exercise the contract between the two packages: files written
here must load through the fusion package's reader unchanged, with row
counts matching the extraction manifests, and must run through its fuse and
probe commands end to end. The fusion package is used the way a downstream
user would use it: its reader for verification, its CLI for the pipeline.
No accuracy level is asserted; the contract under test is the plumbing.
"""

import json
import subprocess
import sys

import numpy as np
import numpy.testing as npt
import pytest

krossfuse_io = pytest.importorskip(
    "krossfuse.io", reason="cross-component tests need the fusion package installed"
)

from kf_extractors import ExtractionManifest, build_encoder, extract  # noqa: E402


def run_extract_cli(manifest_path):
    return subprocess.run(
        [sys.executable, "-m", "kf_extractors", "--manifest", str(manifest_path)],
        capture_output=True,
        text=True,
    )


def run_fusion_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "krossfuse", *args],
        capture_output=True,
        text=True,
    )


def write_manifest(path, **fields):
    path.write_text(json.dumps(fields))
    return path


class TestReadMatrixRoundTrip:
    def test_kfmx_and_npy_load_unchanged(self, corpus, tmp_path):
        """Both output formats load through the fusion reader bit-identically.

        np.load serves as the independent reference decoder for the .npy
        file; the KFMX file must agree with it byte for byte in content.
        """
        m_kfmx = ExtractionManifest(
            model="image/patchgrid",
            dataset=str(corpus),
            modality="image",
            output=str(tmp_path / "e.kfmx"),
            options={"grid": 4},
        )
        m_npy = ExtractionManifest(
            model="image/patchgrid",
            dataset=str(corpus),
            modality="image",
            output=str(tmp_path / "e.npy"),
            options={"grid": 4},
        )
        extract(m_kfmx)
        extract(m_npy)
        E_kfmx = krossfuse_io.read_matrix(tmp_path / "e.kfmx").data
        E_npy = krossfuse_io.read_matrix(tmp_path / "e.npy").data
        reference = np.load(tmp_path / "e.npy")
        npt.assert_array_equal(E_npy, reference)
        npt.assert_array_equal(E_kfmx, reference)
        assert E_kfmx.shape == (200, 48)

    def test_rows_match_encoder_output_exactly(self, corpus, tmp_path):
        """The file holds the encoder's numbers, not a lossy transform."""
        out = tmp_path / "e.kfmx"
        extract(
            ExtractionManifest(
                model="image/histogram",
                dataset=str(corpus),
                modality="image",
                output=str(out),
                options={"bins": 16},
            )
        )
        E = krossfuse_io.read_matrix(out).data
        from kf_extractors.extract import _open_image, list_image_files

        paths = list_image_files(str(corpus))
        encoder = build_encoder("image/histogram", options={"bins": 16})
        head = encoder.encode_batch([_open_image(p) for p in paths[:5]])
        npt.assert_array_equal(E[:5], head)

    def test_row_count_matches_manifest_sample_count(self, corpus, tmp_path):
        out = tmp_path / "e.kfmx"
        result = extract(
            ExtractionManifest(
                model="image/patchgrid",
                dataset=str(corpus),
                modality="image",
                output=str(out),
                options={"grid": 2},
            )
        )
        n_images = len(list(corpus.glob("*.png")))
        n_labels = len((corpus / "labels.txt").read_text().splitlines())
        assert result.rows == n_images == n_labels == 200
        assert krossfuse_io.read_matrix(out).data.shape[0] == n_images


class TestFuseProbePipeline:
    def test_two_class_extract_fuse_probe_end_to_end(self, corpus, tmp_path):
        """200 two-class images flow through extract, fuse, and probe.

        Two different encoders play the cross-modal and uni-modal roles on
        the same image list, both extractions run through the CLI, the
        fused features come from the fusion CLI with a fixed seed so train
        and test share one projection, and the probe command must report a
        parseable accuracy. No accuracy level is asserted.
        """
        ma = write_manifest(
            tmp_path / "cross.json",
            model="image/patchgrid",
            dataset=str(corpus),
            modality="image",
            output="a.kfmx",
            normalize=True,
            options={"grid": 4},
        )
        mb = write_manifest(
            tmp_path / "uni.json",
            model="image/histogram",
            dataset=str(corpus),
            modality="image",
            output="b.npy",
            normalize=True,
            options={"bins": 16},
        )
        for m in (ma, mb):
            proc = run_extract_cli(m)
            assert proc.returncode == 0, proc.stderr
            assert "(200 x 48)" in proc.stdout

        A = krossfuse_io.read_matrix(tmp_path / "a.kfmx").data
        B = krossfuse_io.read_matrix(tmp_path / "b.npy").data
        labels = krossfuse_io.read_labels(corpus / "labels.txt")
        assert A.shape[0] == B.shape[0] == labels.shape[0] == 200

        split = 100
        krossfuse_io.write_matrix(A[:split], tmp_path / "a_tr.kfmx")
        krossfuse_io.write_matrix(A[split:], tmp_path / "a_te.kfmx")
        krossfuse_io.write_matrix(B[:split], tmp_path / "b_tr.kfmx")
        krossfuse_io.write_matrix(B[split:], tmp_path / "b_te.kfmx")
        krossfuse_io.write_labels(labels[:split], tmp_path / "y_tr.txt")
        krossfuse_io.write_labels(labels[split:], tmp_path / "y_te.txt")

        for part in ("tr", "te"):
            proc = run_fusion_cli(
                "fuse",
                "--method", "rp",
                "--cross", str(tmp_path / f"a_{part}.kfmx"),
                "--uni", str(tmp_path / f"b_{part}.kfmx"),
                "--C", "1.0",
                "--l", "256",
                "--seed", "0",
                "--out", str(tmp_path / f"z_{part}.kfmx"),
            )
            assert proc.returncode == 0, proc.stderr

        proc = run_fusion_cli(
            "probe",
            "--train", str(tmp_path / "z_tr.kfmx"),
            "--train-labels", str(tmp_path / "y_tr.txt"),
            "--test", str(tmp_path / "z_te.kfmx"),
            "--test-labels", str(tmp_path / "y_te.txt"),
        )
        assert proc.returncode == 0, proc.stderr
        field, value = proc.stdout.split()
        assert field == "accuracy"
        assert 0.0 <= float(value) <= 1.0

    def test_normalized_extraction_has_unit_rows_through_reader(self, corpus, tmp_path):
        out = tmp_path / "n.kfmx"
        extract(
            ExtractionManifest(
                model="image/patchgrid",
                dataset=str(corpus),
                modality="image",
                output=str(out),
                normalize=True,
                options={"grid": 4},
            )
        )
        norms = np.linalg.norm(krossfuse_io.read_matrix(out).data, axis=1)
        assert np.abs(norms - 1.0).max() <= 1e-6
