"""Canonical serialization of retrieval bundles into generator prompts.

A prompt has up to three segments, always in this order and always with
English scaffold words:

    Similar images show: c1, c2, ..., cn.
    This image might contain: w1, w2, ..., wm.
    Caption in <DisplayName>:

Segments 1 and 2 are omitted when they have no items; segment 3 is always
present.  Items are joined by ", ", segments 1-2 end with "." and segment
3 with ":".  Present segments are joined by a single space by default (a
newline separator is selectable).  Retrieved texts are inserted verbatim:
byte offsets, not parsing, define the structure.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import PromptSpec
from .languages import LanguageCode
from .retrieval import AugmentationBundle

CAPTIONS_LEAD = "Similar images show: "
CONCEPTS_LEAD = "This image might contain: "
TARGET_LEAD = "Caption in "


@dataclass(frozen=True)
class PromptString:
    """A rendered prompt plus the byte offsets of its segments.

    ``segments`` holds one (start, end) byte range into the UTF-8 encoding
    of ``text`` per segment, or None for an omitted segment.  Joining the
    present ranges with ``separator`` reconstructs the text exactly.
    """

    text: str
    segments: tuple[tuple[int, int] | None, tuple[int, int] | None, tuple[int, int]]
    separator: str = " "

    def reconstruct(self) -> str:
        data = self.text.encode("utf-8")
        parts = [data[s:e] for rng in self.segments if rng is not None for s, e in [rng]]
        return self.separator.encode("utf-8").join(parts).decode("utf-8")


def render_prompt(spec: PromptSpec, separator: str = " ") -> PromptString:
    """Serialize a PromptSpec to its canonical prompt string."""
    seg1 = f"{CAPTIONS_LEAD}{', '.join(spec.captions)}." if spec.captions else None
    seg2 = f"{CONCEPTS_LEAD}{', '.join(spec.concepts)}." if spec.concepts else None
    seg3 = f"{TARGET_LEAD}{spec.lang.display_name}:"

    offsets: list[tuple[int, int] | None] = []
    pieces: list[str] = []
    pos = 0
    sep_len = len(separator.encode("utf-8"))
    for seg in (seg1, seg2, seg3):
        if seg is None:
            offsets.append(None)
            continue
        if pieces:
            pos += sep_len
        nbytes = len(seg.encode("utf-8"))
        offsets.append((pos, pos + nbytes))
        pos += nbytes
        pieces.append(seg)
    text = separator.join(pieces)
    return PromptString(text=text, segments=(offsets[0], offsets[1], offsets[2]), separator=separator)


def assemble_prompt(bundle: AugmentationBundle, lang: LanguageCode, separator: str = " ") -> PromptString:
    """Render one bundle: caption texts and raw concept tokens, in their
    retrieved (score-descending) order."""
    spec = PromptSpec(
        captions=tuple(text for text, _ in bundle.captions),
        concepts=tuple(token for token, _ in bundle.concepts),
        lang=lang,
    )
    return render_prompt(spec, separator=separator)


def assemble_batch(bundles, lang: LanguageCode, separator: str = " ") -> list[PromptString]:
    """Element-wise assemble_prompt, preserving input order."""
    return [assemble_prompt(b, lang, separator=separator) for b in bundles]
