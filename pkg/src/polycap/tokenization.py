"""Language-aware tokenization used for wordlist extraction and evaluation.

Space-delimited languages take the default rule: NFC-normalize, case-fold
(a no-op for uncased scripts), strip leading/trailing punctuation from each
token, drop empties.  Languages without explicit word boundaries (zh, ja,
th, hi) delegate to a pluggable segmenter; the built-in fallbacks are
deterministic and dependency-free: single code-point tokens for CJK text
and orthographic-syllable clusters for Thai and Devanagari.  Dictionary-
based segmenters (jieba, fugashi, and friends) can be plugged in through
``register_segmenter`` without becoming hard dependencies.
"""

from __future__ import annotations

import unicodedata
from enum import Enum
from typing import Callable

from .languages import LanguageCode


class TokenizeMode(str, Enum):
    WORDLIST = "wordlist"
    EVAL = "eval"


Segmenter = Callable[[str, TokenizeMode], list[str]]

# Languages whose built-in handling needs a segmenter rather than spaces.
SEGMENTED_LANGS = ("zh", "ja", "th", "hi")

_registry: dict[str, Segmenter] = {}


def register_segmenter(code: str, segmenter: Segmenter) -> None:
    """Install an external segmenter for a language code (overrides built-ins)."""
    _registry[code] = segmenter


def unregister_segmenter(code: str) -> None:
    _registry.pop(code, None)


def registered_segmenter(code: str) -> Segmenter | None:
    return _registry.get(code)


def _strip_punct(token: str) -> str:
    start, end = 0, len(token)
    while start < end and unicodedata.category(token[start]).startswith("P"):
        start += 1
    while end > start and unicodedata.category(token[end - 1]).startswith("P"):
        end -= 1
    return token[start:end]


def _word_rule(text: str) -> list[str]:
    tokens = []
    for raw in text.split():
        tok = _strip_punct(raw.casefold())
        if tok:
            tokens.append(tok)
    return tokens


def _is_cjk(ch: str) -> bool:
    cp = ord(ch)
    return (
        0x4E00 <= cp <= 0x9FFF      # CJK unified
        or 0x3400 <= cp <= 0x4DBF   # extension A
        or 0x20000 <= cp <= 0x2FA1F # extensions B+
        or 0xF900 <= cp <= 0xFAFF   # compatibility ideographs
        or 0x3040 <= cp <= 0x309F   # hiragana
        or 0x30A0 <= cp <= 0x30FF   # katakana
        or 0x31F0 <= cp <= 0x31FF   # katakana extensions
        or 0xFF66 <= cp <= 0xFF9D   # halfwidth katakana
    )


def _cjk_fallback(text: str) -> list[str]:
    """Single code-point tokens for CJK characters; everything between CJK
    runs goes through the default word rule."""
    tokens: list[str] = []
    buf: list[str] = []
    for ch in text:
        if _is_cjk(ch):
            if buf:
                tokens.extend(_word_rule("".join(buf)))
                buf = []
            tokens.append(ch)
        else:
            buf.append(ch)
    if buf:
        tokens.extend(_word_rule("".join(buf)))
    return tokens


_THAI_PREVOWELS = {chr(cp) for cp in range(0x0E40, 0x0E45)}            # leading vowels
_THAI_CONSONANTS = {chr(cp) for cp in range(0x0E01, 0x0E2F)}
_THAI_FOLLOW = {chr(cp) for cp in range(0x0E30, 0x0E3B)} | {"ๅ"} | {
    chr(cp) for cp in range(0x0E47, 0x0E4F)
}


def _thai_clusters(run: str) -> list[str]:
    clusters: list[str] = []
    cur = ""
    pending_prevowel = False
    for ch in run:
        if ch in _THAI_PREVOWELS:
            if cur:
                clusters.append(cur)
            cur = ch
            pending_prevowel = True
        elif ch in _THAI_CONSONANTS:
            if pending_prevowel:
                cur += ch
                pending_prevowel = False
            else:
                if cur:
                    clusters.append(cur)
                cur = ch
        elif ch in _THAI_FOLLOW and cur:
            cur += ch
        else:
            if cur:
                clusters.append(cur)
                cur = ""
            pending_prevowel = False
            clusters.append(ch)
    if cur:
        clusters.append(cur)
    return clusters


def _thai_fallback(text: str) -> list[str]:
    tokens: list[str] = []
    buf: list[str] = []
    run: list[str] = []
    for ch in text:
        if 0x0E00 <= ord(ch) <= 0x0E7F:
            if buf:
                tokens.extend(_word_rule("".join(buf)))
                buf = []
            run.append(ch)
        else:
            if run:
                tokens.extend(_thai_clusters("".join(run)))
                run = []
            buf.append(ch)
    if run:
        tokens.extend(_thai_clusters("".join(run)))
    if buf:
        tokens.extend(_word_rule("".join(buf)))
    return tokens


_VIRAMA = "्"


def _devanagari_clusters(run: str) -> list[str]:
    clusters: list[str] = []
    cur = ""
    for ch in run:
        joins = (
            cur
            and (
                unicodedata.category(ch) in ("Mn", "Mc")
                or ch == _VIRAMA
                or cur.endswith(_VIRAMA)
            )
        )
        if joins:
            cur += ch
        else:
            if cur:
                clusters.append(cur)
            cur = ch
    if cur:
        clusters.append(cur)
    return clusters


def _hindi_fallback(text: str) -> list[str]:
    tokens: list[str] = []
    buf: list[str] = []
    run: list[str] = []
    for ch in text:
        if 0x0900 <= ord(ch) <= 0x097F:
            if buf:
                tokens.extend(_word_rule("".join(buf)))
                buf = []
            run.append(ch)
        else:
            if run:
                tokens.extend(_devanagari_clusters("".join(run)))
                run = []
            buf.append(ch)
    if run:
        tokens.extend(_devanagari_clusters("".join(run)))
    if buf:
        tokens.extend(_word_rule("".join(buf)))
    return tokens


_FALLBACKS: dict[str, Callable[[str], list[str]]] = {
    "zh": _cjk_fallback,
    "ja": _cjk_fallback,
    "th": _thai_fallback,
    "hi": _hindi_fallback,
}


def tokenizer_name(code: str) -> str:
    """Name of the segmentation route a language takes (for run reports)."""
    if code in _registry:
        return f"adapter:{getattr(_registry[code], '__name__', 'custom')}"
    if code in _FALLBACKS:
        return f"builtin-{code}-fallback"
    return "builtin-word"


def tokenize(lang: LanguageCode | str, text: str, mode: TokenizeMode = TokenizeMode.EVAL) -> list[str]:
    """Tokenize text for the given language.

    External segmenters registered for the language take precedence and
    receive the NFC-normalized text verbatim; their output is only filtered
    for empties.  Built-in routes additionally strip per-token punctuation.
    """
    code = lang.code if isinstance(lang, LanguageCode) else lang
    text = unicodedata.normalize("NFC", text)
    segmenter = _registry.get(code)
    if segmenter is not None:
        return [t for t in segmenter(text, mode) if t]
    fallback = _FALLBACKS.get(code)
    if fallback is not None:
        return [t for t in (_strip_punct(tok) for tok in fallback(text)) if t]
    return _word_rule(text)
