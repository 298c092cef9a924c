import json

import pytest

from polycap.errors import UnknownLanguageError
from polycap.languages import (
    BUILTIN_LANGUAGES,
    LanguageCode,
    load_language_table,
    validate_language,
)


def test_builtin_table_covers_36_languages():
    assert len(BUILTIN_LANGUAGES) == 36
    for code, name in BUILTIN_LANGUAGES.items():
        lang = validate_language(code)
        assert lang.display_name == name


def test_en_and_quz():
    assert validate_language("en") == LanguageCode("en", "English")
    assert validate_language("quz") == LanguageCode("quz", "Quechua")


def test_unknown_code_rejected():
    with pytest.raises(UnknownLanguageError):
        validate_language("xx")


def test_user_table_extends_builtin(tmp_path):
    path = tmp_path / "langs.json"
    path.write_text(json.dumps({"tlh": "Klingon"}), encoding="utf-8")
    table = load_language_table(path)
    assert validate_language("tlh", table) == LanguageCode("tlh", "Klingon")
    # built-ins still resolve with the extra table in hand
    assert validate_language("en", table).display_name == "English"


def test_user_table_overrides_builtin_display_name(tmp_path):
    path = tmp_path / "langs.json"
    path.write_text(json.dumps({"fa": "Persian"}), encoding="utf-8")
    table = load_language_table(path)
    assert validate_language("fa", table).display_name == "Persian"


def test_bad_code_shape_rejected():
    for bad in ("EN", "e", "engl", "e1", ""):
        with pytest.raises(UnknownLanguageError):
            LanguageCode(bad, "English")


def test_bad_user_table_entries(tmp_path):
    path = tmp_path / "langs.json"
    path.write_text(json.dumps({"XXX": "Bad"}), encoding="utf-8")
    with pytest.raises(UnknownLanguageError):
        load_language_table(path)
