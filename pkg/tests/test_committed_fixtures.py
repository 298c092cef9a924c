"""The committed .cemb fixtures drive the pipeline without any exporter:
the primary component is self-sufficient on checked-in binary inputs."""

import json
from pathlib import Path

import numpy as np

from polycap.cli import main
from polycap.core import write_jsonl
from polycap.embfile import read_embeddings

DATA = Path(__file__).parent / "data"


def test_fixtures_parse_with_unit_norms():
    for name, count in (
        ("fixture_captions.cemb", 8),
        ("fixture_concepts.cemb", 6),
        ("fixture_queries.cemb", 2),
    ):
        matrix = read_embeddings(DATA / name)
        assert len(matrix) == count and matrix.dim == 8
        norms = np.linalg.norm(matrix.rows.astype(np.float64), axis=1)
        assert np.all(np.abs(norms - 1.0) <= 1e-5)


def test_pipeline_runs_on_committed_fixtures(tmp_path):
    pivot = tmp_path / "pivot.jsonl"
    write_jsonl(pivot, [
        {"caption_id": f"c{i}", "lang": "en", "text": f"caption {i} text"} for i in range(8)
    ])
    assert main(["--quiet", "--lang", "en", "build-index", str(DATA / "fixture_captions.cemb"),
                 "--kind", "caption", "--out", str(tmp_path / "cap.cidx")]) == 0
    assert main(["--quiet", "--lang", "en", "build-index", str(DATA / "fixture_concepts.cemb"),
                 "--kind", "concept", "--out", str(tmp_path / "con.cidx")]) == 0
    bundles = tmp_path / "bundles.jsonl"
    assert main(["--quiet", "--lang", "en", "retrieve",
                 "--queries", str(DATA / "fixture_queries.cemb"),
                 "--caption-index", str(tmp_path / "cap.cidx"),
                 "--concept-index", str(tmp_path / "con.cidx"),
                 "--pivot", str(pivot), "--mode", "direct",
                 "-n", "2", "-m", "3", "--out", str(bundles)]) == 0
    rows = [json.loads(l) for l in bundles.read_text(encoding="utf-8").splitlines()]
    assert [r["image_id"] for r in rows] == ["img0", "img1"]
    assert all(len(r["captions"]) == 2 and len(r["concepts"]) == 3 for r in rows)
