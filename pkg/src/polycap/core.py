"""Core domain types shared by every other module.

All types are immutable after construction and safe to share across
concurrent readers.  Embeddings are float32 in memory and on disk; scores
are computed in float64 internally so that rankings are stable across
platforms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    DuplicateIdError,
    InvalidUtf8Error,
    IoError,
    ZeroVectorError,
)
from .languages import LanguageCode, validate_language

SCORE_TOL = 1e-6  # slack allowed on the [-1, 1] cosine bound


class ConceptSource(str, Enum):
    """Provenance tag for a concept wordlist entry."""

    COCO = "coco"
    XM3600 = "xm3600"
    PANGEA = "pangea"
    WIKI = "wiki"
    ORACLE = "oracle"


class RetrievalMode(str, Enum):
    PIVOT_EN = "pivot_en"
    DIRECT = "direct"


@dataclass(frozen=True)
class CaptionRecord:
    """One caption of one image in one language.

    Records sharing a caption_id across languages are translations of one
    another; that shared-id contract is what pivot retrieval relies on.
    """

    caption_id: str
    image_id: str
    lang: LanguageCode
    text: str

    def __post_init__(self):
        if not self.caption_id:
            raise ValueError("caption_id must be non-empty")
        if not self.text.strip():
            raise ValueError(f"caption {self.caption_id!r} has empty text")

    def to_json(self) -> dict:
        return {
            "caption_id": self.caption_id,
            "image_id": self.image_id,
            "lang": self.lang.code,
            "text": self.text,
        }

    @classmethod
    def from_json(cls, obj: dict, extra_table: dict[str, str] | None = None) -> "CaptionRecord":
        return cls(
            caption_id=obj["caption_id"],
            image_id=obj["image_id"],
            lang=validate_language(obj["lang"], extra_table),
            text=obj["text"],
        )


@dataclass(frozen=True)
class ConceptEntry:
    """One lexical item of a per-language wordlist.

    ``wrapped`` is the template-applied carrier phrase used only for
    embedding; it is empty until a template has been applied.  The raw
    ``token`` is what retrieval returns and prompts insert.
    """

    token: str
    lang: LanguageCode
    source: ConceptSource
    wrapped: str = ""

    def __post_init__(self):
        if not self.token or "\n" in self.token:
            raise ValueError(f"bad concept token: {self.token!r}")
        if self.wrapped and self.token not in self.wrapped:
            raise ValueError(f"wrapped form {self.wrapped!r} does not contain token {self.token!r}")

    def to_json(self) -> dict:
        return {
            "token": self.token,
            "lang": self.lang.code,
            "source": self.source.value,
            "wrapped": self.wrapped,
        }

    @classmethod
    def from_json(cls, obj: dict, extra_table: dict[str, str] | None = None) -> "ConceptEntry":
        return cls(
            token=obj["token"],
            lang=validate_language(obj["lang"], extra_table),
            source=ConceptSource(obj["source"]),
            wrapped=obj.get("wrapped", ""),
        )


@dataclass(frozen=True)
class EmbeddingMatrix:
    """Row-major float32 vectors keyed by string ids."""

    ids: tuple[str, ...]
    rows: np.ndarray

    def __post_init__(self):
        rows = np.ascontiguousarray(self.rows, dtype=np.float32)
        if rows.ndim != 2:
            raise ValueError(f"rows must be 2-D, got shape {rows.shape}")
        if len(self.ids) != rows.shape[0]:
            raise ValueError(f"{len(self.ids)} ids but {rows.shape[0]} rows")
        seen = set()
        for rid in self.ids:
            if rid in seen:
                raise DuplicateIdError(rid)
            seen.add(rid)
        rows.flags.writeable = False
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "rows", rows)

    @property
    def dim(self) -> int:
        return self.rows.shape[1]

    def __len__(self) -> int:
        return self.rows.shape[0]


def normalize_rows(matrix: EmbeddingMatrix) -> EmbeddingMatrix:
    """Divide every row by its L2 norm so cosine similarity equals dot product.

    Norms are computed in float64 and the result is cast back to float32.
    Raises ZeroVectorError (naming the offending id) for any row with norm
    below 1e-12; silently skipping such rows would hide a broken exporter.
    """
    rows64 = matrix.rows.astype(np.float64)
    norms = np.linalg.norm(rows64, axis=1)
    bad = np.where(norms < 1e-12)[0]
    if bad.size:
        i = int(bad[0])
        raise ZeroVectorError(matrix.ids[i], float(norms[i]))
    normalized = (rows64 / norms[:, None]).astype(np.float32)
    return EmbeddingMatrix(matrix.ids, normalized)


@dataclass(frozen=True)
class RetrievalResult:
    """Ranked hits for one query: sorted by score descending, ties broken
    by ascending id byte order, no duplicate ids."""

    query_id: str
    hits: tuple[tuple[str, float], ...]

    def __post_init__(self):
        object.__setattr__(self, "hits", tuple((str(i), float(s)) for i, s in self.hits))
        prev = None
        seen = set()
        for hit_id, score in self.hits:
            if not -1.0 - SCORE_TOL <= score <= 1.0 + SCORE_TOL:
                raise ValueError(f"score {score} out of [-1, 1] for id {hit_id!r}")
            if hit_id in seen:
                raise DuplicateIdError(hit_id)
            seen.add(hit_id)
            if prev is not None:
                prev_id, prev_score = prev
                if score > prev_score or (score == prev_score and hit_id < prev_id):
                    raise ValueError("hits are not in (score desc, id asc) order")
            prev = (hit_id, score)

    def to_json(self) -> dict:
        return {"query_id": self.query_id, "hits": [[i, s] for i, s in self.hits]}

    @classmethod
    def from_json(cls, obj: dict) -> "RetrievalResult":
        return cls(obj["query_id"], tuple((i, s) for i, s in obj["hits"]))


@dataclass(frozen=True)
class PromptSpec:
    """Inputs of one generator prompt: retrieved captions, retrieved
    concepts, and the target language.  Both lists may be empty; a spec
    with neither captions nor concepts still yields the final segment."""

    captions: tuple[str, ...]
    concepts: tuple[str, ...]
    lang: LanguageCode

    def __post_init__(self):
        object.__setattr__(self, "captions", tuple(self.captions))
        object.__setattr__(self, "concepts", tuple(self.concepts))

    def to_json(self) -> dict:
        return {
            "captions": list(self.captions),
            "concepts": list(self.concepts),
            "lang": self.lang.code,
        }

    @classmethod
    def from_json(cls, obj: dict, extra_table: dict[str, str] | None = None) -> "PromptSpec":
        return cls(
            captions=tuple(obj["captions"]),
            concepts=tuple(obj["concepts"]),
            lang=validate_language(obj["lang"], extra_table),
        )


@dataclass(frozen=True)
class RunConfig:
    """Pipeline knobs with the defaults used throughout: top-4 captions,
    top-10 concepts, and generator settings beam 5 / length penalty 1.0 /
    max 25 tokens."""

    n_captions: int = 4
    m_concepts: int = 10
    beam_size: int = 5
    length_penalty: float = 1.0
    max_tokens: int = 25
    retrieval_mode: RetrievalMode = RetrievalMode.DIRECT

    def __post_init__(self):
        if self.n_captions < 0:
            raise ValueError("n_captions must be >= 0")
        if self.m_concepts < 0:
            raise ValueError("m_concepts must be >= 0")
        if self.beam_size < 1:
            raise ValueError("beam_size must be >= 1")
        if self.max_tokens < 1:
            raise ValueError("max_tokens must be >= 1")
        if not isinstance(self.retrieval_mode, RetrievalMode):
            object.__setattr__(self, "retrieval_mode", RetrievalMode(self.retrieval_mode))

    def to_json(self) -> dict:
        return {
            "n_captions": self.n_captions,
            "m_concepts": self.m_concepts,
            "beam_size": self.beam_size,
            "length_penalty": self.length_penalty,
            "max_tokens": self.max_tokens,
            "retrieval_mode": self.retrieval_mode.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "RunConfig":
        return cls(
            n_captions=obj.get("n_captions", 4),
            m_concepts=obj.get("m_concepts", 10),
            beam_size=obj.get("beam_size", 5),
            length_penalty=obj.get("length_penalty", 1.0),
            max_tokens=obj.get("max_tokens", 25),
            retrieval_mode=RetrievalMode(obj.get("retrieval_mode", "direct")),
        )


def read_jsonl(path: str | Path):
    """Yield parsed objects from a UTF-8 JSON-lines file."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8Error(f"{path} is not valid UTF-8") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            yield json.loads(line)
        except json.JSONDecodeError as exc:
            raise IoError(f"{path}:{lineno}: bad JSON line: {exc}") from exc


def write_jsonl(path: str | Path, rows) -> None:
    """Write objects as one compact JSON document per line (UTF-8)."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for row in rows:
                fh.write(json.dumps(row, ensure_ascii=False, sort_keys=True))
                fh.write("\n")
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_caption_corpus(path: str | Path, extra_table: dict[str, str] | None = None) -> list[CaptionRecord]:
    """Read a caption corpus JSONL file of {caption_id, image_id, lang, text}."""
    return [CaptionRecord.from_json(obj, extra_table) for obj in read_jsonl(path)]
