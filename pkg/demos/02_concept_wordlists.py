#!/usr/bin/env python3
"""Extract a concept wordlist from captions, wrap tokens for embedding,
and enrich the list with an external lexicon under a contamination filter.
"""

from polycap import (
    CaptionRecord,
    ConceptEntry,
    ConceptSource,
    ContaminationFilter,
    TemplateTable,
    Wordlist,
    extract_concepts,
    merge_wordlists,
    validate_language,
    wrap_concept,
)

en = validate_language("en")

corpus = [
    CaptionRecord("c1", "img1", en, "A red bus parked on the street."),
    CaptionRecord("c2", "img1", en, "The bus waits near a market."),
    CaptionRecord("c3", "img2", en, "A vendor sells fruit at the market."),
]

wordlist = extract_concepts(corpus, en)
print(f"extracted {len(wordlist)} unique tokens:")
print(" ", ", ".join(wordlist.tokens()))

# tokens are embedded via a carrier phrase but retrieved/propagated raw
table = TemplateTable.default()
for token in ("bus", "market"):
    print(f"  {token!r} embeds as {wrap_concept(table, en, token)!r}")

# enrichment: a culturally-specific lexicon, minus anything that leaks
# from held-out evaluation pairs
addition = Wordlist(
    lang=en,
    entries=tuple(
        ConceptEntry(t, en, ConceptSource.XM3600) for t in ("tuk-tuk", "lantern", "market")
    ),
)
filt = ContaminationFilter.from_tokens(["lantern"])  # 'lantern' occurs only in held-out pairs
merged = merge_wordlists(wordlist, [addition], filt)
print(f"\nafter enrichment: {len(merged)} tokens (lantern filtered, market deduplicated)")
print(" ", ", ".join(merged.tokens()))
