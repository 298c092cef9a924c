"""Exporter exception hierarchy."""

from __future__ import annotations


class ExporterError(Exception):
    """Base class for all exporter errors."""


class EncoderLoadError(ExporterError):
    """The requested encoder could not be loaded or constructed."""


class InputFormatError(ExporterError):
    """An input manifest, wordlist, or recording is malformed or incomplete."""


class ZeroEmbeddingError(ExporterError):
    """The encoder produced a zero vector, which cannot be normalized."""

    def __init__(self, row_id: str):
        super().__init__(f"encoder produced a zero vector for {row_id!r}")
        self.row_id = row_id


class MissingTranslationError(ExporterError):
    """The multilingual corpus has holes in its (caption_id, lang) grid."""

    def __init__(self, holes: list[tuple[str, str]]):
        shown = ", ".join(f"({cid}, {lang})" for cid, lang in holes[:10])
        more = "" if len(holes) <= 10 else f" (+{len(holes) - 10} more)"
        super().__init__(f"missing translations: {shown}{more}")
        self.holes = holes
