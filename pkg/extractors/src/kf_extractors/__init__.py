"""Embedding extraction for the fusion toolchain.

Runs an encoder (a small deterministic built-in, or a pretrained hub model)
over an image or text dataset and writes the resulting embedding matrix as a
KFMX or .npy file, the formats the fusion CLI reads. The whole job is
described by a JSON manifest; see `ExtractionManifest`.

This package deliberately does not import the fusion library. The contract
between the two is the file formats alone.
"""

from .encoders import ExtractionError, available_models, build_encoder
from .extract import ExtractionResult, extract
from .manifest import ExtractionManifest, ManifestError, load_manifest
from .writers import write_matrix_atomic

__all__ = [
    "ExtractionError",
    "ExtractionManifest",
    "ExtractionResult",
    "ManifestError",
    "available_models",
    "build_encoder",
    "extract",
    "load_manifest",
    "write_matrix_atomic",
]

__version__ = "0.1.0"
