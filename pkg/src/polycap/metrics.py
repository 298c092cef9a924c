"""Self-contained CIDEr-D and corpus BLEU-4 scorers.

Both metrics operate on pre-tokenized text: candidates and references are
space-joined token sequences produced by eval-mode tokenization, so the
per-language segmentation lives in one place.  ``evaluate_run`` is the
file-level harness that tokenizes, joins predictions with references, and
emits a JSON report.

CIDEr-D follows the consensus-metric definition exactly as implemented by
its canonical public scorer: raw n-gram counts weighted by
log(N) - log(max(1, df)), element-wise clipping of candidate weights
against each reference, cosine per n-gram order, a Gaussian length penalty
(sigma = 6) on the difference in bigram totals, mean over orders 1..4,
divided by the reference count and scaled by 10.  A 0/0 cosine is defined
as 0, so a degenerate corpus (all idf zero, or no overlap) scores 0 rather
than NaN.
"""

from __future__ import annotations

import logging
import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .core import read_jsonl
from .errors import EmptyCorpusError, KeyCollisionError, MissingReferenceError
from .languages import LanguageCode
from .tokenization import TokenizeMode, tokenize, tokenizer_name

log = logging.getLogger(__name__)

NGRAM_ORDERS = 4
SIGMA = 6.0
SCALE = 10.0


class Metric(str, Enum):
    CIDER_D = "cider_d"
    BLEU4 = "bleu4"


@dataclass(frozen=True)
class EvalInstance:
    """One scored image: a candidate caption and its reference set."""

    image_id: str
    candidate: str
    references: tuple[str, ...]
    lang: LanguageCode

    def __post_init__(self):
        object.__setattr__(self, "references", tuple(self.references))
        if not self.references:
            raise ValueError(f"image {self.image_id!r} has no references")


@dataclass(frozen=True)
class CorpusScore:
    """A corpus-level metric value; CIDEr also carries per-image scores."""

    metric: Metric
    value: float
    per_image: dict[str, float] | None = None

    def __post_init__(self):
        if self.value < 0:
            raise ValueError(f"{self.metric.value} score must be >= 0, got {self.value}")


def _ngram_counts(tokens: list[str]) -> Counter:
    counts: Counter = Counter()
    for n in range(1, NGRAM_ORDERS + 1):
        for i in range(len(tokens) - n + 1):
            counts[tuple(tokens[i : i + n])] += 1
    return counts


@dataclass(frozen=True)
class IdfTable:
    """Document frequencies over a reference corpus, for orders 1..4.

    df counts images whose reference set contains the n-gram at least
    once; idf(w) = log(N / df(w)).  N-grams never seen in any reference
    are weighted as if df were 1 (idf = log N), matching the canonical
    scorer's clamp.
    """

    n_images: int
    df: Mapping[tuple, int]

    @property
    def log_n(self) -> float:
        return math.log(float(self.n_images))

    def idf(self, ngram: tuple) -> float:
        return self.log_n - math.log(max(1.0, float(self.df.get(ngram, 0))))


def compute_idf(corpus: list[EvalInstance]) -> IdfTable:
    """Count, for every reference n-gram, the images whose references use it."""
    if not corpus:
        raise EmptyCorpusError("cannot compute idf over an empty corpus")
    df: Counter = Counter()
    for inst in corpus:
        seen: set[tuple] = set()
        for ref in inst.references:
            seen.update(_ngram_counts(ref.split()))
        for ngram in seen:
            df[ngram] += 1
    return IdfTable(n_images=len(corpus), df=dict(df))


def _tfidf_vectors(counts: Counter, idf: IdfTable):
    """Weighted vectors per order, their norms, and the bigram total used
    by the length penalty."""
    vecs: list[dict[tuple, float]] = [{} for _ in range(NGRAM_ORDERS)]
    norms_sq = [0.0] * NGRAM_ORDERS
    bigrams = 0
    for ngram, tf in counts.items():
        order = len(ngram) - 1
        weight = float(tf) * idf.idf(ngram)
        vecs[order][ngram] = weight
        norms_sq[order] += weight * weight
        if order == 1:
            bigrams += tf
    return vecs, [math.sqrt(x) for x in norms_sq], bigrams


def _clipped_cosine(cand_vecs, cand_norms, ref_vecs, ref_norms) -> list[float]:
    sims = [0.0] * NGRAM_ORDERS
    for order in range(NGRAM_ORDERS):
        ref_vec = ref_vecs[order]
        acc = 0.0
        for ngram, weight in cand_vecs[order].items():
            ref_weight = ref_vec.get(ngram, 0.0)
            acc += min(weight, ref_weight) * ref_weight
        if cand_norms[order] != 0.0 and ref_norms[order] != 0.0:
            acc /= cand_norms[order] * ref_norms[order]
        else:
            acc = 0.0
        sims[order] = acc
    return sims


def cider_d(corpus: list[EvalInstance], idf: IdfTable) -> CorpusScore:
    """Score a corpus; the corpus value is the mean of per-image scores.

    Instances are pre-tokenized (space-joined).  An empty candidate scores
    0 with a warning.  Per-image scores lie in [0, 10].
    """
    if not corpus:
        raise EmptyCorpusError("cannot score an empty corpus")
    per_image: dict[str, float] = {}
    for inst in corpus:
        cand_tokens = inst.candidate.split()
        if not cand_tokens:
            log.warning("empty candidate for image %r scores 0", inst.image_id)
            per_image[inst.image_id] = 0.0
            continue
        cand_vecs, cand_norms, cand_len = _tfidf_vectors(_ngram_counts(cand_tokens), idf)
        total = 0.0
        for ref in inst.references:
            ref_vecs, ref_norms, ref_len = _tfidf_vectors(_ngram_counts(ref.split()), idf)
            sims = _clipped_cosine(cand_vecs, cand_norms, ref_vecs, ref_norms)
            delta = float(cand_len - ref_len)
            penalty = math.exp(-(delta * delta) / (2.0 * SIGMA * SIGMA))
            total += sum(sims) / NGRAM_ORDERS * penalty
        per_image[inst.image_id] = SCALE * total / len(inst.references)
    value = sum(per_image.values()) / len(per_image)
    return CorpusScore(metric=Metric.CIDER_D, value=value, per_image=per_image)


def _closest_ref_len(cand_len: int, ref_lens: list[int]) -> int:
    return min(ref_lens, key=lambda r: (abs(r - cand_len), r))


def bleu4(corpus: list[EvalInstance], smooth: bool = False) -> CorpusScore:
    """Corpus-level BLEU-4 with modified n-gram precision and brevity penalty.

    Precisions are clipped against the maximum reference count per n-gram
    and pooled over the corpus; the brevity penalty uses the per-segment
    closest reference length (ties broken toward the shorter reference).
    Any zero precision yields 0 unless add-one smoothing is enabled.
    """
    if not corpus:
        raise EmptyCorpusError("cannot score an empty corpus")
    clipped = [0] * NGRAM_ORDERS
    totals = [0] * NGRAM_ORDERS
    cand_total = 0
    ref_total = 0
    for inst in corpus:
        cand_tokens = inst.candidate.split()
        ref_token_lists = [ref.split() for ref in inst.references]
        cand_total += len(cand_tokens)
        ref_total += _closest_ref_len(len(cand_tokens), [len(r) for r in ref_token_lists])
        for n in range(1, NGRAM_ORDERS + 1):
            cand_counts = Counter(
                tuple(cand_tokens[i : i + n]) for i in range(len(cand_tokens) - n + 1)
            )
            if not cand_counts:
                continue
            max_ref: Counter = Counter()
            for ref_tokens in ref_token_lists:
                ref_counts = Counter(
                    tuple(ref_tokens[i : i + n]) for i in range(len(ref_tokens) - n + 1)
                )
                for ngram in cand_counts:
                    max_ref[ngram] = max(max_ref[ngram], ref_counts[ngram])
            clipped[n - 1] += sum(min(c, max_ref[g]) for g, c in cand_counts.items())
            totals[n - 1] += sum(cand_counts.values())

    if cand_total == 0:
        return CorpusScore(metric=Metric.BLEU4, value=0.0)
    precisions = []
    for m, t in zip(clipped, totals):
        if smooth:
            precisions.append((m + 1.0) / (t + 1.0))
        else:
            precisions.append(m / t if t > 0 else 0.0)
    if any(p == 0.0 for p in precisions):
        return CorpusScore(metric=Metric.BLEU4, value=0.0)
    log_mean = math.fsum(math.log(p) for p in precisions) / NGRAM_ORDERS
    bp = 1.0 if cand_total > ref_total else math.exp(1.0 - ref_total / cand_total)
    return CorpusScore(metric=Metric.BLEU4, value=bp * math.exp(log_mean))


def tokenize_for_eval(lang: LanguageCode, text: str) -> str:
    """One text through eval-mode tokenization, back to a space-joined string."""
    return " ".join(tokenize(lang, text, TokenizeMode.EVAL))


def build_eval_corpus(
    predictions: dict[str, str],
    references: dict[str, list[str]],
    lang: LanguageCode,
    order: list[str],
) -> list[EvalInstance]:
    """Join predictions with references and tokenize both sides."""
    missing = sorted(
        iid for iid in predictions if iid not in references or not references[iid]
    )
    if missing:
        raise MissingReferenceError(missing)
    return [
        EvalInstance(
            image_id=iid,
            candidate=tokenize_for_eval(lang, predictions[iid]),
            references=tuple(tokenize_for_eval(lang, r) for r in references[iid]),
            lang=lang,
        )
        for iid in order
    ]


def _read_keyed(path, key: str, value_key: str) -> tuple[dict, list[str]]:
    out: dict = {}
    order: list[str] = []
    for obj in read_jsonl(path):
        k = obj[key]
        if k in out:
            raise KeyCollisionError(k, str(path))
        out[k] = obj[value_key]
        order.append(k)
    return out, order


def evaluate_run(
    predictions_path,
    references_path,
    lang: LanguageCode,
    metric: Metric,
    smooth_bleu: bool = False,
) -> tuple[CorpusScore, dict]:
    """Score a predictions file against a references file.

    Predictions: JSONL {"image_id", "caption"}.  References: JSONL
    {"image_id", "captions": [...]}.  Every prediction must have
    references; unreferenced extra rows in the references file are
    ignored.  Returns the score and a JSON-ready report that also records
    which tokenizer route ran.
    """
    predictions, order = _read_keyed(predictions_path, "image_id", "caption")
    references, _ = _read_keyed(references_path, "image_id", "captions")
    if not predictions:
        raise EmptyCorpusError(f"no predictions in {predictions_path}")
    corpus = build_eval_corpus(predictions, references, lang, order)
    if metric is Metric.CIDER_D:
        score = cider_d(corpus, compute_idf(corpus))
    elif metric is Metric.BLEU4:
        score = bleu4(corpus, smooth=smooth_bleu)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    report = {
        "metric": score.metric.value,
        "corpus": score.value,
        "per_image": score.per_image,
        "lang": lang.code,
        "n_images": len(corpus),
        "tokenizer": tokenizer_name(lang.code),
    }
    return score, report
