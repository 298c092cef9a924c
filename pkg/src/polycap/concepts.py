"""Concept wordlists: extraction from caption corpora, template wrapping,
enrichment merges, and oracle lists.

Wordlists keep every unique token of the source captions; there is no
frequency or stopword filtering, because retrieval itself is what decides
relevance.  An optional minimum-length filter exists but defaults off.
"""

from __future__ import annotations

import json
import logging
import unicodedata
from dataclasses import dataclass
from pathlib import Path

from .core import CaptionRecord, ConceptEntry, ConceptSource, read_jsonl
from .errors import (
    EmptyCorpusError,
    InvalidUtf8Error,
    IoError,
    KeyCollisionError,
    LanguageMismatchError,
    MissingTemplateError,
)
from .languages import LanguageCode
from .tokenization import TokenizeMode, tokenize

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class TemplateEntry:
    """One language's concept carrier phrase: prefix + token + suffix."""

    prefix: str
    suffix: str = ""
    spaced: bool = True


# Shipped defaults.  Other languages need a user table (JSON file below)
# or fall back to English with a logged warning.
DEFAULT_TEMPLATES: dict[str, TemplateEntry] = {
    "en": TemplateEntry(prefix="a photo of a", suffix="", spaced=True),
    "es": TemplateEntry(prefix="una foto de un", suffix="", spaced=True),
}


@dataclass(frozen=True)
class TemplateTable:
    """Per-language templates for wrapping a concept token before embedding."""

    entries: dict[str, TemplateEntry]

    @classmethod
    def default(cls) -> "TemplateTable":
        return cls(dict(DEFAULT_TEMPLATES))

    @classmethod
    def from_file(cls, path: str | Path) -> "TemplateTable":
        """Load a JSON table {lang: {"prefix": str, "suffix": str, "spaced": bool}}."""
        try:
            raw = Path(path).read_bytes()
        except OSError as exc:
            raise IoError(f"cannot read template table {path}: {exc}") from exc
        try:
            obj = json.loads(raw.decode("utf-8"))
        except UnicodeDecodeError as exc:
            raise InvalidUtf8Error(f"template table {path} is not valid UTF-8") from exc
        except json.JSONDecodeError as exc:
            raise IoError(f"template table {path}: {exc}") from exc
        entries = dict(DEFAULT_TEMPLATES)
        for code, spec in obj.items():
            entries[code] = TemplateEntry(
                prefix=spec["prefix"],
                suffix=spec.get("suffix", ""),
                spaced=bool(spec.get("spaced", True)),
            )
        return cls(entries)

    def to_json(self) -> dict:
        return {
            code: {"prefix": e.prefix, "suffix": e.suffix, "spaced": e.spaced}
            for code, e in sorted(self.entries.items())
        }

    def entry_for(self, code: str, fallback: bool = True) -> TemplateEntry:
        entry = self.entries.get(code)
        if entry is not None:
            return entry
        if fallback and "en" in self.entries:
            log.warning("no concept template for %r; falling back to the English template", code)
            return self.entries["en"]
        raise MissingTemplateError(code)


def wrap_concept(table: TemplateTable, lang: LanguageCode | str, token: str, fallback: bool = True) -> str:
    """Wrap a raw token in the language's carrier phrase.

    Spaced templates join prefix/token/suffix with single spaces; CJK
    templates declare spaced=false and concatenate directly.  Wrapping is
    injective for distinct tokens under a fixed template.
    """
    if not token:
        raise ValueError("cannot wrap an empty token")
    code = lang.code if isinstance(lang, LanguageCode) else lang
    entry = table.entry_for(code, fallback=fallback)
    if entry.spaced:
        parts = [p for p in (entry.prefix, token, entry.suffix) if p]
        return " ".join(parts)
    return f"{entry.prefix}{token}{entry.suffix}"


@dataclass(frozen=True)
class Wordlist:
    """An ordered, deduplicated set of concept entries for one language."""

    lang: LanguageCode
    entries: tuple[ConceptEntry, ...]
    provenance: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(self.entries))
        object.__setattr__(self, "provenance", tuple(self.provenance))
        seen = set()
        for entry in self.entries:
            if entry.lang.code != self.lang.code:
                raise LanguageMismatchError(
                    f"entry {entry.token!r} is {entry.lang.code}, wordlist is {self.lang.code}"
                )
            key = unicodedata.normalize("NFC", entry.token)
            if key in seen:
                raise ValueError(f"duplicate token {entry.token!r} in wordlist")
            seen.add(key)

    def tokens(self) -> list[str]:
        return [e.token for e in self.entries]

    def __len__(self) -> int:
        return len(self.entries)


def _dedup_entries(lang: LanguageCode, candidates) -> list[ConceptEntry]:
    seen: set[str] = set()
    out: list[ConceptEntry] = []
    for entry in candidates:
        key = unicodedata.normalize("NFC", entry.token)
        if key not in seen:
            seen.add(key)
            out.append(entry)
    return out


def extract_concepts(
    corpus: list[CaptionRecord],
    lang: LanguageCode,
    source: ConceptSource = ConceptSource.COCO,
    min_token_length: int = 0,
) -> Wordlist:
    """Collect the unique tokens of a caption corpus, in first-seen order.

    All records must share ``lang``.  Tokens come from wordlist-mode
    tokenization; the result is independent of caption order as a set.
    """
    if not corpus:
        raise EmptyCorpusError("no caption records to extract concepts from")
    for rec in corpus:
        if rec.lang.code != lang.code:
            raise LanguageMismatchError(
                f"caption {rec.caption_id!r} is {rec.lang.code}, expected {lang.code}"
            )
    seen: set[str] = set()
    entries: list[ConceptEntry] = []
    for rec in corpus:
        for token in tokenize(lang, rec.text, TokenizeMode.WORDLIST):
            if min_token_length and len(token) < min_token_length:
                continue
            if token not in seen:
                seen.add(token)
                entries.append(ConceptEntry(token=token, lang=lang, source=source))
    return Wordlist(lang=lang, entries=tuple(entries))


@dataclass(frozen=True)
class ContaminationFilter:
    """Tokens to drop from enrichment additions because they occur only in
    excluded (held-out) image-caption pairs."""

    banned: frozenset[str]

    @classmethod
    def from_tokens(cls, tokens) -> "ContaminationFilter":
        return cls(frozenset(unicodedata.normalize("NFC", t) for t in tokens))

    @classmethod
    def from_corpora(
        cls,
        excluded: list[CaptionRecord],
        retained: list[CaptionRecord],
        lang: LanguageCode,
    ) -> "ContaminationFilter":
        """Ban tokens of the excluded pairs that never occur in retained pairs."""
        excluded_tokens: set[str] = set()
        for rec in excluded:
            excluded_tokens.update(tokenize(lang, rec.text, TokenizeMode.WORDLIST))
        retained_tokens: set[str] = set()
        for rec in retained:
            retained_tokens.update(tokenize(lang, rec.text, TokenizeMode.WORDLIST))
        return cls.from_tokens(excluded_tokens - retained_tokens)

    @classmethod
    def from_file(cls, path: str | Path) -> "ContaminationFilter":
        """Read banned tokens from a one-token-per-line file (comments allowed)."""
        tokens, _ = _read_wordlist_lines(path)
        return cls.from_tokens(t for t, _src in tokens)

    def blocks(self, token: str) -> bool:
        return unicodedata.normalize("NFC", token) in self.banned


def merge_wordlists(
    base: Wordlist,
    additions: list[Wordlist],
    contamination: ContaminationFilter | None = None,
) -> Wordlist:
    """Append the new unique tokens of each addition, in addition order.

    Base order is preserved.  Filtered tokens are removed from additions
    before the merge, never from the base.  Merging is idempotent.
    """
    for add in additions:
        if add.lang.code != base.lang.code:
            raise LanguageMismatchError(
                f"addition is {add.lang.code}, base is {base.lang.code}"
            )
    seen = {unicodedata.normalize("NFC", e.token) for e in base.entries}
    entries = list(base.entries)
    for add in additions:
        for entry in add.entries:
            if contamination is not None and contamination.blocks(entry.token):
                continue
            key = unicodedata.normalize("NFC", entry.token)
            if key not in seen:
                seen.add(key)
                entries.append(entry)
    provenance = tuple(base.provenance) + tuple(p for a in additions for p in a.provenance)
    return Wordlist(lang=base.lang, entries=tuple(entries), provenance=provenance)


def _read_wordlist_lines(path: str | Path) -> tuple[list[tuple[str, str | None]], list[str]]:
    """Parse a wordlist file into (token, source-or-None) pairs plus comments."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read wordlist {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8Error(f"wordlist {path} is not valid UTF-8") from exc
    tokens: list[tuple[str, str | None]] = []
    comments: list[str] = []
    current_source: str | None = None
    for line in text.splitlines():
        if line.startswith("#"):
            comments.append(line)
            body = line[1:].strip()
            if body.startswith("source="):
                current_source = body[len("source="):].strip()
            continue
        token = line.strip()
        if token:
            tokens.append((token, current_source))
    return tokens, comments


def load_wordlist(
    path: str | Path,
    lang: LanguageCode,
    default_source: ConceptSource = ConceptSource.COCO,
) -> Wordlist:
    """Load a one-token-per-line wordlist; `# source=` headers tag provenance."""
    pairs, _ = _read_wordlist_lines(path)
    if not pairs:
        raise EmptyCorpusError(f"wordlist {path} holds no tokens")
    candidates = []
    for token, src in pairs:
        source = ConceptSource(src) if src else default_source
        candidates.append(ConceptEntry(token=token, lang=lang, source=source))
    return Wordlist(
        lang=lang,
        entries=tuple(_dedup_entries(lang, candidates)),
        provenance=(str(path),),
    )


def save_wordlist(path: str | Path, wordlist: Wordlist) -> None:
    """Write tokens one per line with `# source=` headers at source changes."""
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"# lang={wordlist.lang.code}\n")
            current: str | None = None
            for entry in wordlist.entries:
                if entry.source.value != current:
                    current = entry.source.value
                    fh.write(f"# source={current}\n")
                fh.write(entry.token + "\n")
    except OSError as exc:
        raise IoError(f"cannot write wordlist {path}: {exc}") from exc


def load_oracle_wordlist(path: str | Path, lang: LanguageCode) -> Wordlist:
    """Load a human-curated concept list; entries are tagged source=oracle."""
    pairs, _ = _read_wordlist_lines(path)
    if not pairs:
        raise EmptyCorpusError(f"oracle wordlist {path} holds no tokens")
    candidates = [ConceptEntry(token=t, lang=lang, source=ConceptSource.ORACLE) for t, _ in pairs]
    return Wordlist(
        lang=lang,
        entries=tuple(_dedup_entries(lang, candidates)),
        provenance=(str(path),),
    )


def load_oracle_map(path: str | Path) -> dict[str, list[str]]:
    """Load a per-image oracle concept map: JSONL {"image_id", "concepts"}."""
    mapping: dict[str, list[str]] = {}
    for obj in read_jsonl(path):
        image_id = obj["image_id"]
        if image_id in mapping:
            raise KeyCollisionError(image_id, str(path))
        mapping[image_id] = list(obj["concepts"])
    return mapping
