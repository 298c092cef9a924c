import json

import pytest

from cembexport.errors import InputFormatError, MissingTranslationError
from cembexport.export import export_pivot_map


def write_corpus(path, rows):
    with open(path, "w", encoding="utf-8") as fh:
        for cid, lang, text in rows:
            fh.write(json.dumps({"caption_id": cid, "lang": lang, "text": text}) + "\n")


class TestPivotExport:
    def test_two_ids_two_langs_four_rows(self, tmp_path):
        inp = tmp_path / "corpus.jsonl"
        write_corpus(inp, [
            ("c1", "en", "one"), ("c1", "es", "uno"),
            ("c2", "en", "two"), ("c2", "es", "dos"),
        ])
        out = tmp_path / "pivot.jsonl"
        n_ids, n_langs = export_pivot_map(inp, out)
        assert (n_ids, n_langs) == (2, 2)
        rows = [json.loads(l) for l in out.read_text(encoding="utf-8").splitlines()]
        assert len(rows) == 4
        assert [(r["caption_id"], r["lang"]) for r in rows] == [
            ("c1", "en"), ("c1", "es"), ("c2", "en"), ("c2", "es"),
        ]

    def test_hole_raises_missing_translation(self, tmp_path):
        inp = tmp_path / "corpus.jsonl"
        write_corpus(inp, [
            ("c1", "en", "one"), ("c1", "es", "uno"),
            ("c2", "en", "two"),  # es hole
        ])
        with pytest.raises(MissingTranslationError) as exc:
            export_pivot_map(inp, tmp_path / "pivot.jsonl")
        assert exc.value.holes == [("c2", "es")]

    def test_rerun_byte_identical(self, tmp_path):
        inp = tmp_path / "corpus.jsonl"
        # scrambled input order must not matter
        write_corpus(inp, [
            ("c2", "es", "dos"), ("c1", "en", "one"),
            ("c2", "en", "two"), ("c1", "es", "uno"),
        ])
        out1, out2 = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        export_pivot_map(inp, out1)
        export_pivot_map(inp, out2)
        assert out1.read_bytes() == out2.read_bytes()

    def test_extra_fields_tolerated(self, tmp_path):
        inp = tmp_path / "corpus.jsonl"
        inp.write_text(
            json.dumps({"caption_id": "c1", "lang": "en", "text": "x", "image_id": "i"}) + "\n",
            encoding="utf-8",
        )
        assert export_pivot_map(inp, tmp_path / "o.jsonl") == (1, 1)

    def test_missing_fields_rejected(self, tmp_path):
        inp = tmp_path / "corpus.jsonl"
        inp.write_text('{"caption_id": "c1", "lang": "en"}\n', encoding="utf-8")
        with pytest.raises(InputFormatError):
            export_pivot_map(inp, tmp_path / "o.jsonl")

    def test_empty_corpus_rejected(self, tmp_path):
        inp = tmp_path / "corpus.jsonl"
        inp.write_text("", encoding="utf-8")
        with pytest.raises(InputFormatError):
            export_pivot_map(inp, tmp_path / "o.jsonl")
