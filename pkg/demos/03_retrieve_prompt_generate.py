#!/usr/bin/env python3
"""The retrieval-to-prompt path, end to end in memory.

English-pivot retrieval: hits come from an English datastore, and shared
caption ids map them into the target language before prompting.  The stub
generator stands in for the real captioner.
"""

import numpy as np

from polycap import (
    EmbeddingMatrix,
    IndexMeta,
    PivotMap,
    RetrievalMode,
    RunConfig,
    build_index,
    assemble_prompt,
    normalize_rows,
    retrieve_batch,
    validate_language,
)
from polycap.generator import GeneratorRequest, StubGenerator

rng = np.random.default_rng(0)

caption_index = build_index(
    normalize_rows(EmbeddingMatrix(
        ("c1", "c2", "c3", "c4", "c5"),
        rng.standard_normal((5, 16)).astype(np.float32),
    )),
    IndexMeta("demo", "en", "caption"),
)
concept_index = build_index(
    normalize_rows(EmbeddingMatrix(
        ("bus", "market", "street", "vendor", "fruit"),
        rng.standard_normal((5, 16)).astype(np.float32),
    )),
    IndexMeta("demo", "en", "concept"),
)
pivot = PivotMap.from_records(
    [(f"c{i}", "en", f"english caption {i}") for i in range(1, 6)]
    + [(f"c{i}", "es", f"una descripción {i}") for i in range(1, 6)]
)

queries = normalize_rows(EmbeddingMatrix(
    ("img-a", "img-b"), rng.standard_normal((2, 16)).astype(np.float32)
))

cfg = RunConfig(n_captions=2, m_concepts=3, retrieval_mode=RetrievalMode.PIVOT_EN)
es = validate_language("es")
batch = retrieve_batch(
    queries, caption_index, concept_index, cfg, texts=pivot, target_lang="es"
)

generator = StubGenerator()
for bundle in batch.bundles:
    prompt = assemble_prompt(bundle, es)
    response = generator.generate(GeneratorRequest.from_config(bundle.image_id, prompt.text, cfg))
    print(f"{bundle.image_id}:")
    print(f"  prompt   : {prompt.text}")
    print(f"  generated: {response.caption}")
