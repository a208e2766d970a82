"""Extraction manifests: one JSON object describing one extraction job.

Required fields: "model", "dataset", "modality", "output". Optional fields
and their defaults: "batch_size" 64, "device" "cpu", "normalize" false,
"options" {} (passed through to the encoder). Relative "dataset" and
"output" paths are resolved against the manifest's own directory so a
manifest can travel with its data.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field

MODALITIES = ("image", "text")

_REQUIRED = ("model", "dataset", "modality", "output")
_STRING_FIELDS = ("model", "dataset", "modality", "output", "device")


class ManifestError(ValueError):
    """Raised for missing, malformed, or inconsistent manifest content."""


@dataclass(frozen=True)
class ExtractionManifest:
    model: str
    dataset: str
    modality: str
    output: str
    batch_size: int = 64
    device: str = "cpu"
    normalize: bool = False
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        for name in _STRING_FIELDS:
            value = getattr(self, name)
            if not isinstance(value, str) or not value:
                raise ManifestError(f"manifest field {name!r} must be a non-empty string")
        if self.modality not in MODALITIES:
            raise ManifestError(
                f"manifest modality {self.modality!r} is not one of {MODALITIES}"
            )
        if isinstance(self.batch_size, bool) or not isinstance(self.batch_size, int):
            raise ManifestError("manifest field 'batch_size' must be an integer")
        if self.batch_size < 1:
            raise ManifestError("manifest field 'batch_size' must be >= 1")
        if not isinstance(self.normalize, bool):
            raise ManifestError("manifest field 'normalize' must be true or false")
        if not isinstance(self.options, dict):
            raise ManifestError("manifest field 'options' must be a JSON object")


def load_manifest(path):
    """Parse a manifest JSON file into an ExtractionManifest.

    Unknown fields are rejected rather than ignored so typos surface
    immediately instead of silently falling back to defaults.
    """
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except FileNotFoundError:
        raise ManifestError(f"manifest file does not exist: {path}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestError(f"manifest is not valid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ManifestError("manifest must be a JSON object")
    known = set(_REQUIRED) | {"batch_size", "device", "normalize", "options"}
    for key in raw:
        if key not in known:
            raise ManifestError(f"unknown manifest field {key!r}")
    for key in _REQUIRED:
        if key not in raw:
            raise ManifestError(f"manifest is missing required field {key!r}")
    manifest = ExtractionManifest(**raw)
    base = os.path.dirname(os.path.abspath(path))
    return ExtractionManifest(
        model=manifest.model,
        dataset=_resolve(manifest.dataset, base),
        modality=manifest.modality,
        output=_resolve(manifest.output, base),
        batch_size=manifest.batch_size,
        device=manifest.device,
        normalize=manifest.normalize,
        options=dict(manifest.options),
    )


def _resolve(path, base):
    if os.path.isabs(path):
        return path
    return os.path.join(base, path)
