"""Exception hierarchy shared by all polycap modules.

Every error raised by the library derives from :class:`PolycapError` so
callers (and the CLI exit-code mapping) can catch one base class.
"""

from __future__ import annotations


class PolycapError(Exception):
    """Base class for all polycap errors."""


class UnknownLanguageError(PolycapError):
    """Language code absent from the built-in and user-supplied tables."""

    def __init__(self, code: str):
        super().__init__(f"unknown language code: {code!r}")
        self.code = code


class ZeroVectorError(PolycapError):
    """An embedding row has (near-)zero norm and no defined direction."""

    def __init__(self, row_id: str, norm: float):
        super().__init__(f"zero-norm embedding row {row_id!r} (norm={norm:g})")
        self.row_id = row_id


class DuplicateIdError(PolycapError):
    """The same id occurs twice where ids must be unique."""

    def __init__(self, dup_id: str):
        super().__init__(f"duplicate id: {dup_id!r}")
        self.dup_id = dup_id


class EmptyCorpusError(PolycapError):
    """An operation that needs at least one record received none."""


class DimMismatchError(PolycapError):
    """Query/matrix dimensionality does not match the index."""

    def __init__(self, expected: int, got: int):
        super().__init__(f"dimension mismatch: expected {expected}, got {got}")
        self.expected = expected
        self.got = got


class CorruptFileError(PolycapError):
    """A binary file failed magic/version/structure validation."""


class IoError(PolycapError):
    """File could not be read or written."""


class InvalidUtf8Error(PolycapError):
    """Input bytes are not valid UTF-8."""


class MissingTemplateError(PolycapError):
    """No concept template for the language and fallback was disabled."""

    def __init__(self, lang: str):
        super().__init__(f"no concept template for language {lang!r} and fallback disabled")
        self.lang = lang


class LanguageMismatchError(PolycapError):
    """Records or wordlists with different languages were combined."""


class PivotMissError(PolycapError):
    """A caption id has no text for the requested language."""

    def __init__(self, caption_id: str, lang: str):
        super().__init__(f"pivot map has no entry for caption {caption_id!r} in language {lang!r}")
        self.caption_id = caption_id
        self.lang = lang


class ModeMismatchError(PolycapError):
    """Retrieval mode is inconsistent with the index language or inputs."""


class MissingReferenceError(PolycapError):
    """Predictions exist for image ids that have no reference captions."""

    def __init__(self, image_ids: list[str]):
        shown = ", ".join(image_ids[:10])
        more = "" if len(image_ids) <= 10 else f" (+{len(image_ids) - 10} more)"
        super().__init__(f"no references for image ids: {shown}{more}")
        self.image_ids = image_ids


class KeyCollisionError(PolycapError):
    """The same image id occurs twice in a keyed file."""

    def __init__(self, key: str, path: str = ""):
        where = f" in {path}" if path else ""
        super().__init__(f"duplicate image id {key!r}{where}")
        self.key = key


class EndpointUnreachableError(PolycapError):
    """The caption generator endpoint could not be reached at all."""


class MalformedResponseError(PolycapError):
    """The caption generator returned a response we cannot parse."""
