"""Language codes and their English display names.

The built-in table covers the 36 languages of the XM3600 benchmark.  It is
a floor, not a ceiling: callers may extend it with a user JSON table of the
form ``{"code": "Display Name"}``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .errors import InvalidUtf8Error, IoError, UnknownLanguageError

_CODE_RE = re.compile(r"^[a-z]{2,3}$")

# The 36 XM3600 languages.
BUILTIN_LANGUAGES: dict[str, str] = {
    "ar": "Arabic",
    "bn": "Bengali",
    "cs": "Czech",
    "da": "Danish",
    "de": "German",
    "el": "Greek",
    "en": "English",
    "es": "Spanish",
    "fa": "Farsi",
    "fi": "Finnish",
    "fil": "Filipino",
    "fr": "French",
    "he": "Hebrew",
    "hi": "Hindi",
    "hr": "Croatian",
    "hu": "Hungarian",
    "id": "Indonesian",
    "it": "Italian",
    "ja": "Japanese",
    "ko": "Korean",
    "mi": "Maori",
    "nl": "Dutch",
    "no": "Norwegian",
    "pl": "Polish",
    "pt": "Portuguese",
    "quz": "Quechua",
    "ro": "Romanian",
    "ru": "Russian",
    "sv": "Swedish",
    "sw": "Swahili",
    "te": "Telugu",
    "th": "Thai",
    "tr": "Turkish",
    "uk": "Ukrainian",
    "vi": "Vietnamese",
    "zh": "Chinese",
}


@dataclass(frozen=True)
class LanguageCode:
    """A 2-3 letter lowercase language tag plus its English display name."""

    code: str
    display_name: str

    def __post_init__(self):
        if not _CODE_RE.match(self.code):
            raise UnknownLanguageError(self.code)
        if not self.display_name:
            raise UnknownLanguageError(self.code)

    def __str__(self) -> str:
        return self.code


def load_language_table(path: str | Path) -> dict[str, str]:
    """Load a user language table: a UTF-8 JSON object {code: display_name}."""
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read language table {path}: {exc}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InvalidUtf8Error(f"language table {path} is not valid UTF-8") from exc
    table = json.loads(text)
    if not isinstance(table, dict):
        raise IoError(f"language table {path} must be a JSON object")
    for code, name in table.items():
        if not _CODE_RE.match(code) or not isinstance(name, str) or not name:
            raise UnknownLanguageError(code)
    return table


def validate_language(code: str, extra_table: dict[str, str] | None = None) -> LanguageCode:
    """Resolve a code to a LanguageCode, consulting user extensions first.

    Raises UnknownLanguageError when the code is absent from both the
    built-in 36-language table and the user table.
    """
    if extra_table and code in extra_table:
        return LanguageCode(code, extra_table[code])
    if code in BUILTIN_LANGUAGES:
        return LanguageCode(code, BUILTIN_LANGUAGES[code])
    raise UnknownLanguageError(code)
