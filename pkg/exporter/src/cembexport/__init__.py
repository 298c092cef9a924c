"""Embedding exporter for the polycap pipeline.

Encodes images, captions, and template-wrapped concepts with a
vision-language encoder (or a deterministic stub) and writes the .cemb
files the pipeline's datastores are built from.
"""

from .cembio import CembWriter, read_cemb
from .encoders import HfClipEncoder, RecordedEncoder, StubEncoder, load_encoder
from .errors import (
    EncoderLoadError,
    ExporterError,
    InputFormatError,
    MissingTranslationError,
    ZeroEmbeddingError,
)
from .export import ExportJob, export_embeddings, export_pivot_map

__version__ = "0.1.0"
