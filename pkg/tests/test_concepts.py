import json
import logging

import pytest

from polycap.concepts import (
    ContaminationFilter,
    TemplateEntry,
    TemplateTable,
    Wordlist,
    extract_concepts,
    load_oracle_map,
    load_oracle_wordlist,
    load_wordlist,
    merge_wordlists,
    save_wordlist,
    wrap_concept,
)
from polycap.core import CaptionRecord, ConceptEntry, ConceptSource
from polycap.errors import (
    EmptyCorpusError,
    KeyCollisionError,
    LanguageMismatchError,
    MissingTemplateError,
)
from polycap.languages import validate_language


def records(lang, texts, image="img"):
    return [
        CaptionRecord(f"c{i}", image, lang, text) for i, text in enumerate(texts)
    ]


class TestExtract:
    def test_union_of_unique_tokens(self, en):
        wl = extract_concepts(records(en, ["a red bus.", "a blue bus"]), en)
        assert wl.tokens() == ["a", "red", "bus", "blue"]

    def test_repeated_caption_is_idempotent(self, en):
        once = extract_concepts(records(en, ["a red bus"]), en)
        five = extract_concepts(records(en, ["a red bus"] * 5), en)
        assert once.tokens() == five.tokens()

    def test_set_property_order_independent(self, en):
        texts = ["a red bus", "the blue car", "a small dog runs"]
        fwd = extract_concepts(records(en, texts), en)
        rev = extract_concepts(records(en, list(reversed(texts))), en)
        assert set(fwd.tokens()) == set(rev.tokens())

    def test_empty_corpus(self, en):
        with pytest.raises(EmptyCorpusError):
            extract_concepts([], en)

    def test_language_mismatch(self, en, es):
        mixed = records(en, ["a bus"]) + records(es, ["un autobús"])
        with pytest.raises(LanguageMismatchError):
            extract_concepts(mixed, en)

    def test_no_frequency_filtering(self, en):
        # singletons and stopwords all survive
        wl = extract_concepts(records(en, ["the the the rare xylophone"]), en)
        assert wl.tokens() == ["the", "rare", "xylophone"]

    def test_min_length_filter_opt_in(self, en):
        wl = extract_concepts(records(en, ["a red bus"]), en, min_token_length=2)
        assert wl.tokens() == ["red", "bus"]


class TestWrap:
    def test_english_default(self, en):
        assert wrap_concept(TemplateTable.default(), en, "dog") == "a photo of a dog"

    def test_empty_token(self, en):
        with pytest.raises(ValueError):
            wrap_concept(TemplateTable.default(), en, "")

    def test_cjk_joins_without_spaces(self, zh):
        table = TemplateTable({"zh": TemplateEntry("一张", "的照片", spaced=False)})
        assert wrap_concept(table, zh, "狗") == "一张狗的照片"

    def test_fallback_to_english_warns(self, zh, caplog):
        with caplog.at_level(logging.WARNING):
            wrapped = wrap_concept(TemplateTable.default(), zh, "狗")
        assert wrapped == "a photo of a 狗"
        assert any("falling back" in r.message for r in caplog.records)

    def test_missing_template_when_fallback_disabled(self, zh):
        with pytest.raises(MissingTemplateError):
            wrap_concept(TemplateTable.default(), zh, "狗", fallback=False)

    def test_injective_for_distinct_tokens(self, en):
        table = TemplateTable.default()
        wrapped = {wrap_concept(table, en, t) for t in ["dog", "dogs", "og", "cat"]}
        assert len(wrapped) == 4

    def test_token_is_whole_token_of_wrapped(self, en):
        wrapped = wrap_concept(TemplateTable.default(), en, "dog")
        assert "dog" in wrapped.split()

    def test_table_file_roundtrip(self, tmp_path, zh):
        path = tmp_path / "templates.json"
        path.write_text(
            json.dumps({"zh": {"prefix": "一张", "suffix": "的照片", "spaced": False}}),
            encoding="utf-8",
        )
        table = TemplateTable.from_file(path)
        assert wrap_concept(table, zh, "狗") == "一张狗的照片"
        # defaults still present alongside the user entry
        assert wrap_concept(table, validate_language("en"), "dog") == "a photo of a dog"
        assert table.to_json()["zh"] == {"prefix": "一张", "suffix": "的照片", "spaced": False}


def wl(lang, tokens, source=ConceptSource.COCO):
    return Wordlist(
        lang=lang,
        entries=tuple(ConceptEntry(t, lang, source) for t in tokens),
    )


class TestMerge:
    def test_union_preserving_base_order(self, en):
        merged = merge_wordlists(wl(en, ["a", "b"]), [wl(en, ["b", "c"], ConceptSource.XM3600)])
        assert merged.tokens() == ["a", "b", "c"]
        assert merged.entries[2].source is ConceptSource.XM3600

    def test_empty_addition_identity(self, en):
        base = wl(en, ["a", "b"])
        merged = merge_wordlists(base, [])
        assert merged.tokens() == base.tokens()

    def test_idempotent(self, en):
        base = wl(en, ["a", "b"])
        add = wl(en, ["b", "c"], ConceptSource.XM3600)
        once = merge_wordlists(base, [add])
        twice = merge_wordlists(once, [add])
        assert once.tokens() == twice.tokens()

    def test_size_bounds(self, en):
        base = wl(en, ["a", "b", "c"])
        adds = [wl(en, ["c", "d"], ConceptSource.XM3600), wl(en, ["d", "e"], ConceptSource.PANGEA)]
        merged = merge_wordlists(base, adds)
        assert len(base) <= len(merged) <= len(base) + sum(len(a) for a in adds)

    def test_language_mismatch(self, en, es):
        with pytest.raises(LanguageMismatchError):
            merge_wordlists(wl(en, ["a"]), [wl(es, ["b"])])

    def test_contamination_filter_drops_only_excluded_tokens(self, en):
        excluded = records(en, ["a secret tuk-tuk shrine"])
        retained = records(en, ["a public shrine"])
        filt = ContaminationFilter.from_corpora(excluded, retained, en)
        # 'shrine' occurs in retained pairs too, so it survives; the others don't
        assert filt.blocks("tuk-tuk") and filt.blocks("secret")
        assert not filt.blocks("shrine")
        base = wl(en, ["bus"])
        add = wl(en, ["tuk-tuk", "shrine"], ConceptSource.XM3600)
        merged = merge_wordlists(base, [add], filt)
        assert merged.tokens() == ["bus", "shrine"]

    def test_filter_never_touches_base(self, en):
        # 'bus' is banned yet survives because it sits in the base list;
        # the banned addition token 'car' is dropped.
        filt = ContaminationFilter.from_tokens(["bus", "car"])
        merged = merge_wordlists(wl(en, ["bus"]), [wl(en, ["bus", "car", "van"], ConceptSource.XM3600)], filt)
        assert merged.tokens() == ["bus", "van"]


class TestWordlistFiles:
    def test_roundtrip_with_sources(self, tmp_path, en):
        base = merge_wordlists(
            wl(en, ["a", "b"]), [wl(en, ["c"], ConceptSource.XM3600)]
        )
        path = tmp_path / "words.txt"
        save_wordlist(path, base)
        back = load_wordlist(path, en)
        assert back.tokens() == ["a", "b", "c"]
        assert [e.source for e in back.entries] == [
            ConceptSource.COCO,
            ConceptSource.COCO,
            ConceptSource.XM3600,
        ]

    def test_rerun_byte_identical(self, tmp_path, en):
        base = wl(en, ["x", "y", "z"])
        p1, p2 = tmp_path / "a.txt", tmp_path / "b.txt"
        save_wordlist(p1, base)
        save_wordlist(p2, base)
        assert p1.read_bytes() == p2.read_bytes()

    def test_duplicates_in_file_deduplicated(self, tmp_path, en):
        path = tmp_path / "w.txt"
        path.write_text("dog\ncat\ndog\n", encoding="utf-8")
        assert load_wordlist(path, en).tokens() == ["dog", "cat"]

    def test_nfc_dedup_across_forms(self, tmp_path, en):
        path = tmp_path / "w.txt"
        path.write_text("café\ncafé\n", encoding="utf-8")
        assert len(load_wordlist(path, en)) == 1


class TestOracle:
    def test_three_line_file(self, tmp_path, en):
        path = tmp_path / "oracle.txt"
        path.write_text("tuk-tuk\nshrine\nlantern\n", encoding="utf-8")
        wordlist = load_oracle_wordlist(path, en)
        assert len(wordlist) == 3
        assert all(e.source is ConceptSource.ORACLE for e in wordlist.entries)

    def test_duplicate_lines_deduplicated(self, tmp_path, en):
        path = tmp_path / "oracle.txt"
        path.write_text("tuk-tuk\ntuk-tuk\n", encoding="utf-8")
        assert load_oracle_wordlist(path, en).tokens() == ["tuk-tuk"]

    def test_empty_file(self, tmp_path, en):
        path = tmp_path / "oracle.txt"
        path.write_text("", encoding="utf-8")
        with pytest.raises(EmptyCorpusError):
            load_oracle_wordlist(path, en)

    def test_oracle_map(self, tmp_path):
        path = tmp_path / "map.jsonl"
        path.write_text(
            '{"image_id": "img1", "concepts": ["tuk-tuk"]}\n'
            '{"image_id": "img2", "concepts": ["a", "b"]}\n',
            encoding="utf-8",
        )
        assert load_oracle_map(path) == {"img1": ["tuk-tuk"], "img2": ["a", "b"]}

    def test_oracle_map_collision(self, tmp_path):
        path = tmp_path / "map.jsonl"
        path.write_text(
            '{"image_id": "img1", "concepts": ["x"]}\n'
            '{"image_id": "img1", "concepts": ["y"]}\n',
            encoding="utf-8",
        )
        with pytest.raises(KeyCollisionError):
            load_oracle_map(path)
