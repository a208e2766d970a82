"""Encoder registry: built-in deterministic featurizers and hub-backed models.

Every encoder exposes `modality` ("image" or "text"), `dim`, and
`encode_batch(samples) -> (len(samples), dim) float64 array`. Image encoders
receive RGB PIL images, text encoders receive strings. The built-in
encoders use no randomness and no external weights, so extraction with them
is bit-reproducible anywhere. Hub encoders import their frameworks lazily
and raise ExtractionError when the package or the pretrained weights are
unavailable, before any output file is touched.

Model identifiers:

    image/patchgrid    bilinear downscale to a grid x grid RGB thumbnail
                       (options: "grid", default 8; dim 3 * grid**2)
    image/histogram    per-channel intensity histograms, mass 1 per channel
                       (options: "bins", default 32; dim 3 * bins)
    text/trigram-hash  hashed character trigram counts, casefolded
                       (options: "dim", default 512)
    hub/clip-image     CLIP image tower via transformers
                       (options: "model_name", default openai/clip-vit-base-patch32)
    hub/clip-text      CLIP text tower via transformers (same options)
    hub/resnet18-image torchvision resnet18 penultimate features
    hub/sbert-text     sentence-transformers encoder
                       (options: "model_name", default all-MiniLM-L6-v2)
"""

from __future__ import annotations

import hashlib

import numpy as np
from PIL import Image


class ExtractionError(RuntimeError):
    """Raised when an extraction job cannot produce its output."""


def _require_cpu(model, device):
    # Built-in featurizers have no accelerator path; refusing other devices
    # beats silently ignoring the manifest.
    if device != "cpu":
        raise ExtractionError(f'model {model} runs on device "cpu" only, got {device!r}')


def _int_option(options, key, default, lo, hi):
    value = options.get(key, default)
    if isinstance(value, bool) or not isinstance(value, int):
        raise ExtractionError(f"encoder option {key!r} must be an integer")
    if not lo <= value <= hi:
        raise ExtractionError(f"encoder option {key!r} must be in [{lo}, {hi}], got {value}")
    return value


class PatchGridEncoder:
    """Downscale to a grid x grid RGB thumbnail and flatten, values in [0, 1]."""

    modality = "image"

    def __init__(self, grid=8):
        self.grid = grid

    @property
    def dim(self):
        return 3 * self.grid * self.grid

    def encode_batch(self, images):
        rows = np.empty((len(images), self.dim))
        size = (self.grid, self.grid)
        for i, img in enumerate(images):
            small = img.resize(size, Image.Resampling.BILINEAR)
            rows[i] = np.asarray(small, dtype=np.float64).ravel() / 255.0
        return rows


class ChannelHistogramEncoder:
    """Per-channel intensity histograms; each channel's bins sum to one."""

    modality = "image"

    def __init__(self, bins=32):
        self.bins = bins

    @property
    def dim(self):
        return 3 * self.bins

    def encode_batch(self, images):
        rows = np.empty((len(images), self.dim))
        for i, img in enumerate(images):
            arr = np.asarray(img, dtype=np.uint8)
            pixels = arr.shape[0] * arr.shape[1]
            parts = [
                np.histogram(arr[:, :, c], bins=self.bins, range=(0, 256))[0] / pixels
                for c in range(3)
            ]
            rows[i] = np.concatenate(parts)
        return rows


class TrigramHashEncoder:
    """Casefolded character trigram counts hashed into a fixed-width vector.

    The hash is blake2b, so rows are identical across processes and
    platforms. A line shorter than three characters contributes its whole
    text as a single gram; an empty line yields a zero row.
    """

    modality = "text"

    def __init__(self, dim=512):
        self.dim = dim

    def _index(self, gram):
        digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def encode_batch(self, lines):
        rows = np.zeros((len(lines), self.dim))
        for i, line in enumerate(lines):
            text = line.casefold()
            if not text:
                continue
            grams = [text] if len(text) < 3 else [text[j : j + 3] for j in range(len(text) - 2)]
            for gram in grams:
                rows[i, self._index(gram)] += 1.0
        return rows


class _HubEncoder:
    """Adapter holding a framework-specific batch function built lazily."""

    def __init__(self, modality, dim, batch_fn):
        self.modality = modality
        self.dim = dim
        self._batch_fn = batch_fn

    def encode_batch(self, samples):
        return np.asarray(self._batch_fn(samples), dtype=np.float64)


def _hub_import(model, module_names):
    missing = []
    modules = []
    for name in module_names:
        try:
            modules.append(__import__(name))
        except ImportError:
            missing.append(name)
    if missing:
        raise ExtractionError(
            f"model {model} needs the {', '.join(missing)} package(s); "
            f"install the 'hub' extra to use hub encoders"
        )
    return modules


def _hub_weights(model, loader):
    try:
        return loader()
    except ExtractionError:
        raise
    except Exception as exc:
        raise ExtractionError(
            f"weights for {model} are unavailable locally or via the hub: {exc}"
        ) from exc


def _build_clip(model, options, device, tower):
    _hub_import(model, ("torch", "transformers"))
    import torch
    from transformers import CLIPModel, CLIPProcessor

    name = options.get("model_name", "openai/clip-vit-base-patch32")

    def load():
        clip = CLIPModel.from_pretrained(name).to(device).eval()
        processor = CLIPProcessor.from_pretrained(name)
        return clip, processor

    clip, processor = _hub_weights(model, load)
    dim = clip.config.projection_dim

    if tower == "image":

        def batch_fn(images):
            inputs = processor(images=images, return_tensors="pt").to(device)
            with torch.no_grad():
                feats = clip.get_image_features(**inputs)
            return feats.cpu().numpy()

        return _HubEncoder("image", dim, batch_fn)

    def batch_fn(lines):
        inputs = processor(
            text=list(lines), return_tensors="pt", padding=True, truncation=True
        ).to(device)
        with torch.no_grad():
            feats = clip.get_text_features(**inputs)
        return feats.cpu().numpy()

    return _HubEncoder("text", dim, batch_fn)


def _build_resnet18(model, options, device):
    _hub_import(model, ("torch", "torchvision"))
    import torch
    from torchvision import models as tv_models
    from torchvision import transforms

    def load():
        weights = tv_models.ResNet18_Weights.DEFAULT
        net = tv_models.resnet18(weights=weights)
        net.fc = torch.nn.Identity()
        return net.to(device).eval()

    net = _hub_weights(model, load)
    prep = transforms.Compose(
        [
            transforms.Resize(256),
            transforms.CenterCrop(224),
            transforms.ToTensor(),
            transforms.Normalize(
                mean=(0.485, 0.456, 0.406), std=(0.229, 0.224, 0.225)
            ),
        ]
    )

    def batch_fn(images):
        stack = torch.stack([prep(img) for img in images]).to(device)
        with torch.no_grad():
            feats = net(stack)
        return feats.cpu().numpy()

    return _HubEncoder("image", 512, batch_fn)


def _build_sbert(model, options, device):
    _hub_import(model, ("sentence_transformers",))
    from sentence_transformers import SentenceTransformer

    name = options.get("model_name", "all-MiniLM-L6-v2")
    net = _hub_weights(model, lambda: SentenceTransformer(name, device=device))

    def batch_fn(lines):
        return net.encode(list(lines), convert_to_numpy=True, show_progress_bar=False)

    return _HubEncoder("text", net.get_sentence_embedding_dimension(), batch_fn)


def _build_patchgrid(model, options, device):
    _require_cpu(model, device)
    return PatchGridEncoder(grid=_int_option(options, "grid", 8, 1, 64))


def _build_histogram(model, options, device):
    _require_cpu(model, device)
    return ChannelHistogramEncoder(bins=_int_option(options, "bins", 32, 2, 256))


def _build_trigram(model, options, device):
    _require_cpu(model, device)
    return TrigramHashEncoder(dim=_int_option(options, "dim", 512, 8, 1 << 20))


_BUILDERS = {
    "image/patchgrid": _build_patchgrid,
    "image/histogram": _build_histogram,
    "text/trigram-hash": _build_trigram,
    "hub/clip-image": lambda m, o, d: _build_clip(m, o, d, "image"),
    "hub/clip-text": lambda m, o, d: _build_clip(m, o, d, "text"),
    "hub/resnet18-image": _build_resnet18,
    "hub/sbert-text": _build_sbert,
}

_KNOWN_OPTIONS = {
    "image/patchgrid": ("grid",),
    "image/histogram": ("bins",),
    "text/trigram-hash": ("dim",),
    "hub/clip-image": ("model_name",),
    "hub/clip-text": ("model_name",),
    "hub/resnet18-image": (),
    "hub/sbert-text": ("model_name",),
}


def available_models():
    """Identifiers accepted as the manifest "model" field, sorted."""
    return tuple(sorted(_BUILDERS))


def build_encoder(model, device="cpu", options=None):
    """Instantiate the encoder named by a model identifier.

    Raises ExtractionError for unknown identifiers, unknown options, devices
    an encoder cannot use, or hub models whose package or weights are
    missing.
    """
    options = {} if options is None else dict(options)
    if model not in _BUILDERS:
        raise ExtractionError(
            f"unknown model identifier {model!r}; available: {', '.join(available_models())}"
        )
    for key in options:
        if key not in _KNOWN_OPTIONS[model]:
            raise ExtractionError(f"model {model} does not take option {key!r}")
    return _BUILDERS[model](model, options, device)
