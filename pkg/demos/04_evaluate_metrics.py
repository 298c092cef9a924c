#!/usr/bin/env python3
"""Score captions with CIDEr-D and BLEU-4 under per-language tokenization.

The same candidate gets very different CIDEr-D credit depending on how
much reference consensus its n-grams carry; the Chinese example shows the
code-point fallback segmentation at work.
"""

from polycap import EvalInstance, bleu4, cider_d, compute_idf, tokenize, validate_language
from polycap.metrics import tokenize_for_eval

en = validate_language("en")
zh = validate_language("zh")


def instance(lang, image_id, candidate, references):
    return EvalInstance(
        image_id,
        tokenize_for_eval(lang, candidate),
        tuple(tokenize_for_eval(lang, r) for r in references),
        lang,
    )


corpus = [
    instance(en, "img1", "A red bus drives down the street.",
             ["a red bus drives down the street", "a bus on a road"]),
    instance(en, "img2", "A cat sleeps on the sofa.",
             ["a dog runs in the park", "children play outside"]),
    instance(en, "img3", "people walk through a busy market",
             ["people walk through a busy market at night"]),
]

cider = cider_d(corpus, compute_idf(corpus))
bleu = bleu4(corpus)
print("English corpus:")
print(f"  CIDEr-D corpus score: {cider.value:.4f}")
for image_id, score in cider.per_image.items():
    print(f"    {image_id}: {score:.4f}")
print(f"  BLEU-4 corpus score : {bleu.value:.4f}")

print("\nChinese tokenization (code-point fallback):")
print(" ", tokenize(zh, "红色巴士在街上"))
zh_corpus = [
    instance(zh, "img4", "红色巴士在街上", ["红色巴士在街上", "街上有一辆巴士"]),
    instance(zh, "img5", "一只猫在沙发上", ["公园里有一只狗"]),
]
zh_cider = cider_d(zh_corpus, compute_idf(zh_corpus))
print(f"  CIDEr-D: {zh_cider.value:.4f} "
      f"(exact match scores {zh_cider.per_image['img4']:.1f}, disjoint scores "
      f"{zh_cider.per_image['img5']:.1f})")
