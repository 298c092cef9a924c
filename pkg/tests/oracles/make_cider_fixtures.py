"""Generate the frozen CIDEr-D fixtures in tests/data/cider_fixtures.json.

Run once (``python -m tests.oracles.make_cider_fixtures`` from the repo
root) and commit the output.  The expected values come exclusively from
the reference scorer in cider_reference.py; the production scorer never
touches this file.

50 synthetic corpora: 5-50 images, 1-5 references each, vocabulary of 200
word types.  Case 0 additionally pins the hand-auditable setup of a
candidate identical to its sole reference inside a corpus with
non-degenerate idf.
"""

from __future__ import annotations

import json
import random
from pathlib import Path

from .cider_reference import score_corpus

SEED = 20240601
VOCAB = [f"w{i:03d}" for i in range(200)]
OUT = Path(__file__).resolve().parent.parent / "data" / "cider_fixtures.json"


def _sentence(rng: random.Random, lo: int = 3, hi: int = 12) -> str:
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randint(lo, hi)))


def _corpus(rng: random.Random, case_index: int) -> list[dict]:
    n_images = rng.randint(5, 50)
    instances = []
    for i in range(n_images):
        refs = [_sentence(rng) for _ in range(rng.randint(1, 5))]
        roll = rng.random()
        if roll < 0.4:
            candidate = rng.choice(refs)          # exact copy
        elif roll < 0.7:
            tokens = rng.choice(refs).split()     # perturbed copy
            k = rng.randrange(len(tokens))
            tokens[k] = rng.choice(VOCAB)
            candidate = " ".join(tokens)
        else:
            candidate = _sentence(rng)
        instances.append(
            {"image_id": f"c{case_index:02d}-img{i:03d}", "candidate": candidate, "references": refs}
        )
    if case_index == 0:
        # candidate identical to the sole reference, >= 2 images, non-degenerate idf
        only_ref = _sentence(rng, 6, 10)
        instances[0] = {"image_id": "c00-img000", "candidate": only_ref, "references": [only_ref]}
    return instances


def main() -> None:
    rng = random.Random(SEED)
    cases = []
    for case_index in range(50):
        instances = _corpus(rng, case_index)
        corpus_score, per_image = score_corpus(instances)
        cases.append({"instances": instances, "corpus": corpus_score, "per_image": per_image})
    OUT.parent.mkdir(parents=True, exist_ok=True)
    with open(OUT, "w", encoding="utf-8") as fh:
        json.dump({"seed": SEED, "cases": cases}, fh, indent=1, sort_keys=True)
        fh.write("\n")
    print(f"wrote {len(cases)} cases to {OUT}")


if __name__ == "__main__":
    main()
