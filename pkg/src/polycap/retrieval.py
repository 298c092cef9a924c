"""Caption and concept retrieval for batches of query images.

Caption retrieval runs in one of two modes.  In pivot mode the datastore
holds English caption embeddings and every hit id is mapped to the target
language through the shared-caption-id text map; scores stay in the pivot
space, so the ranked id sequence is identical for every target language.
In direct mode the datastore was built over target-language captions and
the same map supplies their texts.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import EmbeddingMatrix, RetrievalMode, RunConfig, read_jsonl, write_jsonl
from .errors import ModeMismatchError, PivotMissError
from .index import DenseIndex, search_topk


@dataclass(frozen=True)
class PivotMap:
    """(caption_id, lang) -> text lookup with declared language coverage.

    Lookups outside the stored pairs raise PivotMissError; there is no
    silent English fallback.
    """

    lookup: dict[tuple[str, str], str]
    languages: frozenset[str]

    @classmethod
    def from_records(cls, records) -> "PivotMap":
        lookup: dict[tuple[str, str], str] = {}
        languages: set[str] = set()
        for caption_id, lang, text in records:
            lookup[(caption_id, lang)] = text
            languages.add(lang)
        return cls(lookup=lookup, languages=frozenset(languages))

    @classmethod
    def from_file(cls, path) -> "PivotMap":
        """Load a JSONL pivot map of {"caption_id", "lang", "text"} rows."""
        return cls.from_records(
            (obj["caption_id"], obj["lang"], obj["text"]) for obj in read_jsonl(path)
        )

    def text(self, caption_id: str, lang: str) -> str:
        try:
            return self.lookup[(caption_id, lang)]
        except KeyError:
            raise PivotMissError(caption_id, lang) from None

    def caption_ids(self) -> set[str]:
        return {cid for cid, _ in self.lookup}


@dataclass(frozen=True)
class AugmentationBundle:
    """Everything retrieved for one image: scored caption texts and scored
    raw concept tokens, both sorted by score descending."""

    image_id: str
    captions: tuple[tuple[str, float], ...]
    concepts: tuple[tuple[str, float], ...]
    mode: RetrievalMode

    def to_json(self) -> dict:
        return {
            "image_id": self.image_id,
            "captions": [{"text": t, "score": s} for t, s in self.captions],
            "concepts": [{"token": t, "score": s} for t, s in self.concepts],
            "mode": self.mode.value,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "AugmentationBundle":
        return cls(
            image_id=obj["image_id"],
            captions=tuple((c["text"], float(c["score"])) for c in obj["captions"]),
            concepts=tuple((c["token"], float(c["score"])) for c in obj["concepts"]),
            mode=RetrievalMode(obj["mode"]),
        )


def retrieve_captions(
    query: np.ndarray,
    index: DenseIndex,
    cfg: RunConfig,
    texts: PivotMap | None,
    target_lang: str,
    *,
    query_id: str = "",
    dedup_texts: bool = False,
    max_per_image: int | None = None,
    exclude_image_id: bool = False,
    caption_images: dict[str, str] | None = None,
) -> list[tuple[str, float]]:
    """Top-n caption texts with scores for one image embedding.

    ``texts`` maps (caption_id, lang) to caption text and is required
    whenever n_captions > 0: in pivot mode it realizes the cross-lingual
    mapping, in direct mode it simply supplies the target-language texts.
    The optional filters (text dedup, per-image cap, self-exclusion via a
    caption_id -> image_id map) apply before truncation to n.
    """
    if cfg.n_captions == 0:
        return []
    if index.meta.kind != "caption":
        raise ModeMismatchError(f"expected a caption index, got kind={index.meta.kind!r}")
    if cfg.retrieval_mode is RetrievalMode.PIVOT_EN:
        if index.meta.lang != "en":
            raise ModeMismatchError(f"pivot mode needs an English index, got {index.meta.lang!r}")
        if texts is None:
            raise ModeMismatchError("pivot mode needs a caption text map")
        lookup_lang = target_lang
    else:
        if index.meta.lang != target_lang:
            raise ModeMismatchError(
                f"direct mode needs a {target_lang!r} index, got {index.meta.lang!r}"
            )
        if texts is None:
            raise ModeMismatchError("caption retrieval needs a caption text map")
        lookup_lang = target_lang

    filtering = dedup_texts or max_per_image is not None or exclude_image_id
    k = len(index) if filtering else cfg.n_captions
    result = search_topk(index, query, k, query_id=query_id)

    out: list[tuple[str, float]] = []
    seen_texts: set[str] = set()
    per_image: dict[str, int] = {}
    for caption_id, score in result.hits:
        if len(out) >= cfg.n_captions:
            break
        image_id = (caption_images or {}).get(caption_id)
        if exclude_image_id and image_id is not None and image_id == query_id:
            continue
        if max_per_image is not None and image_id is not None:
            if per_image.get(image_id, 0) >= max_per_image:
                continue
        text = texts.text(caption_id, lookup_lang)
        if dedup_texts:
            if text in seen_texts:
                continue
            seen_texts.add(text)
        if image_id is not None:
            per_image[image_id] = per_image.get(image_id, 0) + 1
        out.append((text, score))
    return out


def retrieve_concepts(
    query: np.ndarray,
    index: DenseIndex,
    cfg: RunConfig,
    *,
    query_id: str = "",
) -> list[tuple[str, float]]:
    """Top-m raw concept tokens with scores for one image embedding.

    The index rows were embedded from template-wrapped phrases but carry
    the raw tokens as ids, so hit ids are exactly what prompts need.
    """
    if cfg.m_concepts == 0:
        return []
    if index.meta.kind != "concept":
        raise ModeMismatchError(f"expected a concept index, got kind={index.meta.kind!r}")
    result = search_topk(index, query, cfg.m_concepts, query_id=query_id)
    return [(token, score) for token, score in result.hits]


@dataclass
class BatchRetrieval:
    """Bundles for the queries that succeeded (input order preserved) plus
    the ids and reasons of per-query failures."""

    bundles: list[AugmentationBundle] = field(default_factory=list)
    failures: list[tuple[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures


def retrieve_batch(
    queries: EmbeddingMatrix,
    caption_index: DenseIndex | None,
    concept_index: DenseIndex | None,
    cfg: RunConfig,
    texts: PivotMap | None = None,
    target_lang: str = "en",
    oracle_map: dict[str, list[str]] | None = None,
    **caption_kwargs,
) -> BatchRetrieval:
    """Retrieve captions and concepts for every query image.

    Query ids are image ids.  Oracle concepts, when supplied for an image,
    replace retrieval entirely: they get synthetic score 1.0 and are
    truncated to at most m.  A failed lookup (e.g. a pivot hole) is fatal
    for that query only; the batch records it and continues.
    """
    batch = BatchRetrieval()
    for i in range(len(queries)):
        image_id = queries.ids[i]
        query = queries.rows[i]
        try:
            captions: list[tuple[str, float]] = []
            if cfg.n_captions > 0 and caption_index is not None:
                captions = retrieve_captions(
                    query, caption_index, cfg, texts, target_lang,
                    query_id=image_id, **caption_kwargs,
                )
            if oracle_map is not None and image_id in oracle_map:
                tokens = oracle_map[image_id][: cfg.m_concepts]
                concepts = [(t, 1.0) for t in tokens]
            elif cfg.m_concepts > 0 and concept_index is not None:
                concepts = retrieve_concepts(query, concept_index, cfg, query_id=image_id)
            else:
                concepts = []
            batch.bundles.append(
                AugmentationBundle(
                    image_id=image_id,
                    captions=tuple(captions),
                    concepts=tuple(concepts),
                    mode=cfg.retrieval_mode,
                )
            )
        except PivotMissError as exc:
            batch.failures.append((image_id, str(exc)))
    return batch


def write_bundles(path, bundles) -> None:
    write_jsonl(path, (b.to_json() for b in bundles))


def read_bundles(path) -> list[AugmentationBundle]:
    return [AugmentationBundle.from_json(obj) for obj in read_jsonl(path)]
