"""Retrieval-augmented multilingual captioning toolkit.

Builds exact-search datastores over precomputed caption and concept
embeddings, retrieves top-n captions and top-m concepts per image,
assembles the three-segment generator prompt, and scores generated
captions with CIDEr-D and BLEU-4 under per-language tokenization.
"""

from .concepts import (
    ContaminationFilter,
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
from .core import (
    CaptionRecord,
    ConceptEntry,
    ConceptSource,
    EmbeddingMatrix,
    PromptSpec,
    RetrievalMode,
    RetrievalResult,
    RunConfig,
    normalize_rows,
)
from .embfile import read_embeddings, write_embeddings
from .index import (
    DenseIndex,
    IndexMeta,
    build_index,
    load_index,
    save_index,
    search_batch,
    search_topk,
)
from .languages import BUILTIN_LANGUAGES, LanguageCode, validate_language
from .metrics import (
    CorpusScore,
    EvalInstance,
    IdfTable,
    Metric,
    bleu4,
    cider_d,
    compute_idf,
    evaluate_run,
)
from .prompting import PromptString, assemble_batch, assemble_prompt, render_prompt
from .retrieval import (
    AugmentationBundle,
    PivotMap,
    retrieve_batch,
    retrieve_captions,
    retrieve_concepts,
)
from .tokenization import TokenizeMode, register_segmenter, tokenize, unregister_segmenter

__version__ = "0.1.0"
