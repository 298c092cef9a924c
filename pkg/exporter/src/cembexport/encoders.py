"""Encoder backends behind one interface.

The encoder spec string picks the backend:

    stub:<dim>          deterministic hash-seeded vectors (tests, dry runs)
    recorded:<path>     vectors replayed from a JSON recording
    <model name>        a CLIP/SigLIP-style model loaded via transformers

Only the last needs heavyweight dependencies, and they are imported
lazily so the exporter itself stays light.
"""

from __future__ import annotations

import hashlib
import json
import unicodedata
from pathlib import Path

import numpy as np

from .errors import EncoderLoadError, InputFormatError


class StubEncoder:
    """Deterministic pseudo-encoder: each payload seeds its own RNG row.

    Image refs that point at readable files hash the file bytes, so two
    refs to identical content embed identically.
    """

    def __init__(self, dim: int):
        if dim < 1:
            raise EncoderLoadError(f"stub dimension must be >= 1, got {dim}")
        self.dim = dim
        self.name = f"stub:{dim}"

    def _vector(self, payload: bytes) -> np.ndarray:
        seed = int.from_bytes(hashlib.sha256(payload).digest()[:8], "little")
        rng = np.random.default_rng(seed)
        return rng.standard_normal(self.dim).astype(np.float32)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        return np.stack([
            self._vector(unicodedata.normalize("NFC", t).encode("utf-8")) for t in texts
        ])

    def encode_images(self, refs: list[str]) -> np.ndarray:
        out = []
        for ref in refs:
            path = Path(ref)
            payload = path.read_bytes() if path.is_file() else ref.encode("utf-8")
            out.append(self._vector(payload))
        return np.stack(out)


class RecordedEncoder:
    """Replays vectors recorded as JSON: {"dim": D, "vectors": {key: [...]}}.

    Text jobs look up the exact (wrapped) text; image jobs look up the
    image ref.  A key absent from the recording is an input error.
    """

    def __init__(self, path: str | Path):
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
            self.dim = int(obj["dim"])
            self.vectors = obj["vectors"]
        except (OSError, json.JSONDecodeError, KeyError, ValueError) as exc:
            raise EncoderLoadError(f"cannot load recording {path}: {exc}") from exc
        self.name = f"recorded:{path}"

    def _lookup(self, keys: list[str]) -> np.ndarray:
        rows = []
        for key in keys:
            if key not in self.vectors:
                raise InputFormatError(f"no recorded vector for {key!r}")
            rows.append(np.asarray(self.vectors[key], dtype=np.float32))
        return np.stack(rows)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        return self._lookup(texts)

    def encode_images(self, refs: list[str]) -> np.ndarray:
        return self._lookup(refs)


class HfClipEncoder:
    """CLIP/SigLIP-style model via transformers (optional dependency)."""

    def __init__(self, model_name: str):
        try:
            import torch  # noqa: F401
            from transformers import AutoModel, AutoProcessor, AutoTokenizer
        except ImportError as exc:
            raise EncoderLoadError(f"transformers/torch unavailable: {exc}") from exc
        try:
            self.model = AutoModel.from_pretrained(model_name)
            self.tokenizer = AutoTokenizer.from_pretrained(model_name)
            self.processor = AutoProcessor.from_pretrained(model_name)
        except Exception as exc:
            raise EncoderLoadError(f"cannot load encoder {model_name!r}: {exc}") from exc
        self.model.eval()
        self.name = model_name
        self.dim = int(self.model.config.projection_dim)

    def encode_texts(self, texts: list[str]) -> np.ndarray:
        import torch

        with torch.no_grad():
            inputs = self.tokenizer(texts, padding=True, truncation=True, return_tensors="pt")
            feats = self.model.get_text_features(**inputs)
        return feats.cpu().numpy()

    def encode_images(self, refs: list[str]) -> np.ndarray:
        import torch
        from PIL import Image

        images = [Image.open(ref).convert("RGB") for ref in refs]
        with torch.no_grad():
            inputs = self.processor(images=images, return_tensors="pt")
            feats = self.model.get_image_features(**inputs)
        return feats.cpu().numpy()


def load_encoder(spec: str):
    """Build an encoder from its spec string (see module docstring)."""
    if spec.startswith("stub:"):
        try:
            return StubEncoder(int(spec.split(":", 1)[1]))
        except ValueError as exc:
            raise EncoderLoadError(f"bad stub spec {spec!r}") from exc
    if spec.startswith("recorded:"):
        return RecordedEncoder(spec.split(":", 1)[1])
    return HfClipEncoder(spec)
