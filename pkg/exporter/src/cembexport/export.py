"""Export jobs: encode inputs and emit .cemb files plus pivot maps.

Concept jobs consume template-wrapped carrier phrases for encoding but
record the raw tokens as row ids, so the consuming retrieval stage gets
prompt-ready tokens back from nearest-neighbor hits.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cembio import CembWriter
from .encoders import load_encoder
from .errors import InputFormatError, MissingTranslationError, ZeroEmbeddingError

KINDS = ("image", "caption", "concept")

# Carrier phrases shipped by default; other languages need a template file.
DEFAULT_TEMPLATES = {
    "en": {"prefix": "a photo of a", "suffix": "", "spaced": True},
    "es": {"prefix": "una foto de un", "suffix": "", "spaced": True},
}


@dataclass(frozen=True)
class ExportJob:
    kind: str
    encoder: str
    input_path: str
    out_path: str
    batch_size: int = 64
    lang: str = "en"
    templates_path: str | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InputFormatError(f"kind must be one of {KINDS}, got {self.kind!r}")
        if self.batch_size < 1:
            raise InputFormatError("batch_size must be >= 1")


def _read_jsonl(path: str | Path) -> list[dict]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise InputFormatError(f"cannot read {path}: {exc}") from exc
    rows = []
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            rows.append(json.loads(line))
        except json.JSONDecodeError as exc:
            raise InputFormatError(f"{path}:{lineno}: bad JSON: {exc}") from exc
    return rows


def _load_template(job: ExportJob) -> dict:
    tables = dict(DEFAULT_TEMPLATES)
    if job.templates_path:
        try:
            user = json.loads(Path(job.templates_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputFormatError(f"cannot read templates {job.templates_path}: {exc}") from exc
        tables.update(user)
    if job.lang not in tables:
        raise InputFormatError(
            f"no concept template for language {job.lang!r}; supply --templates"
        )
    return tables[job.lang]


def _wrap(template: dict, token: str) -> str:
    prefix = template.get("prefix", "")
    suffix = template.get("suffix", "")
    if template.get("spaced", True):
        return " ".join(p for p in (prefix, token, suffix) if p)
    return f"{prefix}{token}{suffix}"


def _load_inputs(job: ExportJob) -> tuple[list[str], list[str], bool]:
    """Returns (row ids, encoder payloads, payloads_are_image_refs)."""
    if job.kind == "caption":
        rows = _read_jsonl(job.input_path)
        ids, texts = [], []
        for row in rows:
            if "caption_id" not in row or "text" not in row:
                raise InputFormatError(f"caption rows need caption_id and text: {row!r}")
            ids.append(str(row["caption_id"]))
            texts.append(str(row["text"]))
        return ids, texts, False
    if job.kind == "image":
        rows = _read_jsonl(job.input_path)
        ids, refs = [], []
        for row in rows:
            if "image_id" not in row or "path" not in row:
                raise InputFormatError(f"image rows need image_id and path: {row!r}")
            ids.append(str(row["image_id"]))
            refs.append(str(row["path"]))
        return ids, refs, True
    # concept: one token per line, '#' comments; ids stay raw, texts wrapped
    template = _load_template(job)
    try:
        lines = Path(job.input_path).read_text(encoding="utf-8").splitlines()
    except OSError as exc:
        raise InputFormatError(f"cannot read wordlist {job.input_path}: {exc}") from exc
    tokens = [line.strip() for line in lines if line.strip() and not line.startswith("#")]
    if not tokens:
        raise InputFormatError(f"wordlist {job.input_path} holds no tokens")
    return tokens, [_wrap(template, t) for t in tokens], False


def export_embeddings(job: ExportJob, encoder=None) -> tuple[int, int]:
    """Run one export job; returns (row count, dim).

    Rows are unit-normalized float32 in input order.  Float16 encoder
    outputs are upcast before normalization.  Deterministic given a fixed
    encoder and batch size.
    """
    if encoder is None:
        encoder = load_encoder(job.encoder)
    ids, payloads, is_image = _load_inputs(job)
    seen: set[str] = set()
    for row_id in ids:
        if row_id in seen:
            raise InputFormatError(f"duplicate id {row_id!r} in {job.input_path}")
        seen.add(row_id)

    dim = int(encoder.dim)
    with CembWriter(job.out_path, dim, len(ids)) as writer:
        for start in range(0, len(ids), job.batch_size):
            batch_ids = ids[start : start + job.batch_size]
            batch_payloads = payloads[start : start + job.batch_size]
            if is_image:
                raw = encoder.encode_images(batch_payloads)
            else:
                raw = encoder.encode_texts(batch_payloads)
            raw = np.asarray(raw)
            if raw.dtype == np.float16:
                raw = raw.astype(np.float32)
            if raw.shape != (len(batch_ids), dim):
                raise InputFormatError(
                    f"encoder returned shape {raw.shape}, expected ({len(batch_ids)}, {dim})"
                )
            norms = np.linalg.norm(raw.astype(np.float64), axis=1)
            for j, row_id in enumerate(batch_ids):
                if norms[j] < 1e-12:
                    raise ZeroEmbeddingError(row_id)
                unit = (raw[j].astype(np.float64) / norms[j]).astype(np.float32)
                writer.write_row(row_id, unit)
    return len(ids), dim


def export_pivot_map(input_path: str | Path, out_path: str | Path) -> tuple[int, int]:
    """Turn a multilingual caption corpus into a validated pivot map.

    Declared languages are those occurring anywhere in the corpus; every
    caption_id must cover every declared language or the export fails
    with the list of holes.  Output rows are sorted by (caption_id, lang)
    so reruns are byte-identical.  Returns (caption ids, languages).
    """
    rows = _read_jsonl(input_path)
    lookup: dict[tuple[str, str], str] = {}
    for row in rows:
        if "caption_id" not in row or "lang" not in row or "text" not in row:
            raise InputFormatError(f"pivot rows need caption_id, lang, text: {row!r}")
        lookup[(str(row["caption_id"]), str(row["lang"]))] = str(row["text"])
    if not lookup:
        raise InputFormatError(f"{input_path} holds no caption rows")
    caption_ids = sorted({cid for cid, _ in lookup})
    languages = sorted({lang for _, lang in lookup})
    holes = [
        (cid, lang)
        for cid in caption_ids
        for lang in languages
        if (cid, lang) not in lookup
    ]
    if holes:
        raise MissingTranslationError(holes)
    with open(out_path, "w", encoding="utf-8") as fh:
        for cid in caption_ids:
            for lang in languages:
                record = {"caption_id": cid, "lang": lang, "text": lookup[(cid, lang)]}
                fh.write(json.dumps(record, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
    return len(caption_ids), len(languages)
