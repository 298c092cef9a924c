import json

import numpy as np
import pytest

from cembexport.cembio import read_cemb
from cembexport.encoders import StubEncoder, load_encoder
from cembexport.errors import EncoderLoadError, InputFormatError, ZeroEmbeddingError
from cembexport.export import ExportJob, export_embeddings


def write_captions(path, pairs):
    with open(path, "w", encoding="utf-8") as fh:
        for cid, text in pairs:
            fh.write(json.dumps({"caption_id": cid, "text": text}) + "\n")


class TestStubEncoder:
    def test_deterministic(self):
        enc = StubEncoder(16)
        a = enc.encode_texts(["a red bus", "a cat"])
        b = enc.encode_texts(["a red bus", "a cat"])
        assert np.array_equal(a, b)

    def test_distinct_texts_distinct_vectors(self):
        enc = StubEncoder(16)
        out = enc.encode_texts(["a", "b"])
        assert not np.array_equal(out[0], out[1])

    def test_image_refs_hash_file_bytes(self, tmp_path):
        img1 = tmp_path / "one.bin"
        img2 = tmp_path / "two.bin"
        img1.write_bytes(b"same content")
        img2.write_bytes(b"same content")
        enc = StubEncoder(8)
        out = enc.encode_images([str(img1), str(img2), "missing-ref"])
        assert np.array_equal(out[0], out[1])  # identical bytes, identical rows
        assert not np.array_equal(out[0], out[2])

    def test_spec_parsing(self):
        assert load_encoder("stub:32").dim == 32
        with pytest.raises(EncoderLoadError):
            load_encoder("stub:notanumber")


class TestCaptionExport:
    def test_shape_count_and_order(self, tmp_path):
        inp = tmp_path / "caps.jsonl"
        write_captions(inp, [("c2", "second text"), ("c1", "first text"), ("c3", "third")])
        out = tmp_path / "caps.cemb"
        job = ExportJob("caption", "stub:24", str(inp), str(out))
        count, dim = export_embeddings(job)
        assert (count, dim) == (3, 24)
        ids, rows = read_cemb(out)
        assert ids == ["c2", "c1", "c3"]  # input order, not sorted
        assert rows.shape == (3, 24)

    def test_norms_within_1e4_of_one(self, tmp_path):
        inp = tmp_path / "caps.jsonl"
        write_captions(inp, [(f"c{i}", f"caption text {i}") for i in range(50)])
        out = tmp_path / "caps.cemb"
        export_embeddings(ExportJob("caption", "stub:17", str(inp), str(out), batch_size=7))
        _, rows = read_cemb(out)
        norms = np.linalg.norm(rows.astype(np.float64), axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-4)

    def test_rerun_byte_identical(self, tmp_path):
        inp = tmp_path / "caps.jsonl"
        write_captions(inp, [("c1", "one"), ("c2", "two")])
        out1, out2 = tmp_path / "a.cemb", tmp_path / "b.cemb"
        export_embeddings(ExportJob("caption", "stub:8", str(inp), str(out1)))
        export_embeddings(ExportJob("caption", "stub:8", str(inp), str(out2)))
        assert out1.read_bytes() == out2.read_bytes()

    def test_duplicate_ids_rejected(self, tmp_path):
        inp = tmp_path / "caps.jsonl"
        write_captions(inp, [("c1", "one"), ("c1", "again")])
        with pytest.raises(InputFormatError):
            export_embeddings(ExportJob("caption", "stub:8", str(inp), str(tmp_path / "o.cemb")))

    def test_missing_fields_rejected(self, tmp_path):
        inp = tmp_path / "caps.jsonl"
        inp.write_text('{"caption_id": "c1"}\n', encoding="utf-8")
        with pytest.raises(InputFormatError):
            export_embeddings(ExportJob("caption", "stub:8", str(inp), str(tmp_path / "o.cemb")))


class TestConceptExport:
    def test_raw_token_ids_wrapped_text_encoding(self, tmp_path):
        """The acceptance spot check: row id is the raw token while the
        encoded text is the wrapped carrier phrase."""
        recording = {
            "dim": 4,
            "vectors": {
                "a photo of a dog": [1.0, 0.0, 0.0, 0.0],
                "a photo of a cat": [0.0, 1.0, 0.0, 0.0],
            },
        }
        rec_path = tmp_path / "rec.json"
        rec_path.write_text(json.dumps(recording), encoding="utf-8")
        wordlist = tmp_path / "words.txt"
        wordlist.write_text("# source=coco\ndog\ncat\n", encoding="utf-8")
        out = tmp_path / "concepts.cemb"
        job = ExportJob("concept", f"recorded:{rec_path}", str(wordlist), str(out), lang="en")
        count, dim = export_embeddings(job)
        assert (count, dim) == (2, 4)
        ids, rows = read_cemb(out)
        assert ids == ["dog", "cat"]
        assert np.allclose(rows[0], [1.0, 0.0, 0.0, 0.0])  # the recorded wrapped-text vector

    def test_recorded_encoder_missing_key(self, tmp_path):
        rec_path = tmp_path / "rec.json"
        rec_path.write_text(json.dumps({"dim": 2, "vectors": {}}), encoding="utf-8")
        wordlist = tmp_path / "words.txt"
        wordlist.write_text("dog\n", encoding="utf-8")
        with pytest.raises(InputFormatError):
            export_embeddings(
                ExportJob("concept", f"recorded:{rec_path}", str(wordlist), str(tmp_path / "o.cemb"))
            )

    def test_user_template_file(self, tmp_path):
        templates = tmp_path / "t.json"
        templates.write_text(
            json.dumps({"zh": {"prefix": "一张", "suffix": "的照片", "spaced": False}}),
            encoding="utf-8",
        )
        recording = {"dim": 2, "vectors": {"一张狗的照片": [1.0, 1.0]}}
        rec_path = tmp_path / "rec.json"
        rec_path.write_text(json.dumps(recording), encoding="utf-8")
        wordlist = tmp_path / "w.txt"
        wordlist.write_text("狗\n", encoding="utf-8")
        out = tmp_path / "o.cemb"
        job = ExportJob(
            "concept", f"recorded:{rec_path}", str(wordlist), str(out),
            lang="zh", templates_path=str(templates),
        )
        export_embeddings(job)
        ids, _ = read_cemb(out)
        assert ids == ["狗"]

    def test_unknown_language_without_templates(self, tmp_path):
        wordlist = tmp_path / "w.txt"
        wordlist.write_text("hund\n", encoding="utf-8")
        with pytest.raises(InputFormatError):
            export_embeddings(
                ExportJob("concept", "stub:4", str(wordlist), str(tmp_path / "o.cemb"), lang="de")
            )


class TestImageExport:
    def test_image_manifest(self, tmp_path):
        img = tmp_path / "pic.bin"
        img.write_bytes(b"\x89fakeimagebytes")
        manifest = tmp_path / "imgs.jsonl"
        manifest.write_text(
            json.dumps({"image_id": "img1", "path": str(img)}) + "\n", encoding="utf-8"
        )
        out = tmp_path / "imgs.cemb"
        count, dim = export_embeddings(ExportJob("image", "stub:12", str(manifest), str(out)))
        assert (count, dim) == (1, 12)
        ids, rows = read_cemb(out)
        assert ids == ["img1"]
        assert abs(np.linalg.norm(rows[0].astype(np.float64)) - 1.0) <= 1e-4


class TestNumericEdges:
    def test_float16_upcast(self, tmp_path):
        class Half:
            dim = 3
            def encode_texts(self, texts):
                return np.ones((len(texts), 3), dtype=np.float16)

        inp = tmp_path / "caps.jsonl"
        write_captions(inp, [("c1", "x")])
        out = tmp_path / "o.cemb"
        job = ExportJob("caption", "unused", str(inp), str(out))
        export_embeddings(job, encoder=Half())
        _, rows = read_cemb(out)
        assert rows.dtype == np.float32
        assert abs(np.linalg.norm(rows[0].astype(np.float64)) - 1.0) <= 1e-4

    def test_zero_vector_rejected(self, tmp_path):
        class Zero:
            dim = 3
            def encode_texts(self, texts):
                return np.zeros((len(texts), 3), dtype=np.float32)

        inp = tmp_path / "caps.jsonl"
        write_captions(inp, [("c1", "x")])
        job = ExportJob("caption", "unused", str(inp), str(tmp_path / "o.cemb"))
        with pytest.raises(ZeroEmbeddingError):
            export_embeddings(job, encoder=Zero())

    def test_batch_size_invariance(self, tmp_path):
        inp = tmp_path / "caps.jsonl"
        write_captions(inp, [(f"c{i}", f"text {i}") for i in range(13)])
        out1, out2 = tmp_path / "a.cemb", tmp_path / "b.cemb"
        export_embeddings(ExportJob("caption", "stub:6", str(inp), str(out1), batch_size=1))
        export_embeddings(ExportJob("caption", "stub:6", str(inp), str(out2), batch_size=13))
        assert out1.read_bytes() == out2.read_bytes()
