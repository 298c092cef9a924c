"""Exact nearest-neighbor datastore over unit-normalized embeddings.

Search is exact brute-force cosine (dot product over unit rows) with
float64 score accumulation and deterministic tie-breaking by ascending id
byte order.  Corpora in this pipeline stay small enough (hundreds of
thousands of rows) that exactness is affordable and makes oracle testing
possible; approximate structures are out of scope.

Index file layout (little-endian, no padding):

    magic "CIDX" (4 bytes) | u32 version=1 | u32 dim | u64 count
    meta block: u32 byte length | UTF-8 JSON
    then per row: u32 id byte length | id bytes (UTF-8) | dim x float32
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Sequence

import numpy as np

from . import embfile
from .core import EmbeddingMatrix, RetrievalResult, normalize_rows
from .errors import (
    CorruptFileError,
    DimMismatchError,
    DuplicateIdError,
    EmptyCorpusError,
    InvalidUtf8Error,
    IoError,
    ZeroVectorError,
)

MAGIC = b"CIDX"
VERSION = 1
KINDS = ("caption", "concept")

_HEADER = struct.Struct("<4sIIQ")
_U32 = struct.Struct("<I")

# Rows per chunk when accumulating scores in float64; bounds temp memory.
_CHUNK = 65536


@dataclass(frozen=True)
class IndexMeta:
    """Descriptive metadata carried inside the index file."""

    corpus: str
    lang: str
    kind: str
    built_at: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"kind must be one of {KINDS}, got {self.kind!r}")

    def to_json(self) -> dict:
        return {"corpus": self.corpus, "lang": self.lang, "kind": self.kind, "built_at": self.built_at}

    @classmethod
    def from_json(cls, obj: dict) -> "IndexMeta":
        return cls(obj["corpus"], obj["lang"], obj["kind"], obj.get("built_at", ""))


class DenseIndex:
    """Immutable exact-search index; concurrent searches need no locking."""

    def __init__(self, matrix: EmbeddingMatrix, meta: IndexMeta):
        self.matrix = matrix
        self.meta = meta
        self.id_lookup: dict[str, int] = {rid: i for i, rid in enumerate(matrix.ids)}
        # Ranks of ids under byte order.  UTF-8 byte order equals code-point
        # order, so sorting the Python strings directly is sufficient.
        order = sorted(range(len(matrix.ids)), key=lambda i: matrix.ids[i])
        rank = np.empty(len(order), dtype=np.int64)
        rank[order] = np.arange(len(order))
        self._id_rank = rank

    @property
    def dim(self) -> int:
        return self.matrix.dim

    def __len__(self) -> int:
        return len(self.matrix)


def build_index(matrix: EmbeddingMatrix, meta: IndexMeta) -> DenseIndex:
    """Normalize (if needed) and wrap a matrix as a searchable index.

    Raises EmptyCorpusError for zero rows; DuplicateIdError and
    ZeroVectorError propagate from the matrix and normalization.
    """
    if len(matrix) == 0:
        raise EmptyCorpusError("cannot index an empty embedding matrix")
    norms = np.linalg.norm(matrix.rows.astype(np.float64), axis=1)
    if np.any(np.abs(norms - 1.0) > 1e-5):
        matrix = normalize_rows(matrix)
    return DenseIndex(matrix, meta)


def _scores_f64(rows: np.ndarray, query: np.ndarray) -> np.ndarray:
    """Dot products accumulated in float64, chunked to bound temp memory."""
    out = np.empty(rows.shape[0], dtype=np.float64)
    q = query.astype(np.float64)
    for start in range(0, rows.shape[0], _CHUNK):
        chunk = rows[start : start + _CHUNK].astype(np.float64)
        out[start : start + _CHUNK] = chunk @ q
    return out


def _topk_from_scores(index: DenseIndex, scores: np.ndarray, query_id: str, k: int) -> RetrievalResult:
    order = np.lexsort((index._id_rank, -scores))
    take = order[: min(k, len(order))]
    hits = tuple((index.matrix.ids[i], float(scores[i])) for i in take)
    return RetrievalResult(query_id=query_id, hits=hits)


def search_topk(index: DenseIndex, query: np.ndarray, k: int, query_id: str = "") -> RetrievalResult:
    """Exact top-k by cosine score.

    ``query`` must be a unit vector of the index dimensionality (callers
    feed rows from normalized .cemb files).  Returns min(k, |index|) hits
    sorted by score descending, ties by ascending id byte order.
    """
    query = np.asarray(query, dtype=np.float32).reshape(-1)
    if query.shape[0] != index.dim:
        raise DimMismatchError(index.dim, query.shape[0])
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = _scores_f64(index.matrix.rows, query)
    return _topk_from_scores(index, scores, query_id, k)


def search_batch(index: DenseIndex, queries: EmbeddingMatrix, k: int) -> list[RetrievalResult]:
    """Element-wise equal to repeated search_topk, in query order."""
    if queries.dim != index.dim:
        raise DimMismatchError(index.dim, queries.dim)
    return [
        search_topk(index, queries.rows[i], k, query_id=queries.ids[i])
        for i in range(len(queries))
    ]


def save_index(index: DenseIndex, path: str | Path) -> None:
    """Serialize; load_index(save_index(x)) is bitwise-identical in ids,
    meta, and rows."""
    meta_bytes = json.dumps(index.meta.to_json(), ensure_ascii=False, sort_keys=True).encode("utf-8")
    try:
        with open(path, "wb") as fh:
            fh.write(_HEADER.pack(MAGIC, VERSION, index.dim, len(index)))
            fh.write(_U32.pack(len(meta_bytes)))
            fh.write(meta_bytes)
            for row_id, vector in zip(index.matrix.ids, index.matrix.rows):
                id_bytes = row_id.encode("utf-8")
                fh.write(_U32.pack(len(id_bytes)))
                fh.write(id_bytes)
                fh.write(np.ascontiguousarray(vector, dtype="<f4").tobytes())
    except OSError as exc:
        raise IoError(f"cannot write index {path}: {exc}") from exc


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CorruptFileError(f"truncated index file while reading {what}")
    return data


def read_index_header(fh: BinaryIO) -> tuple[int, int, IndexMeta]:
    magic, version, dim, count = _HEADER.unpack(_read_exact(fh, _HEADER.size, "header"))
    if magic != MAGIC:
        raise CorruptFileError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CorruptFileError(f"unsupported index version {version}")
    (meta_len,) = _U32.unpack(_read_exact(fh, _U32.size, "meta length"))
    try:
        meta_obj = json.loads(_read_exact(fh, meta_len, "meta block").decode("utf-8"))
        meta = IndexMeta.from_json(meta_obj)
    except (UnicodeDecodeError, json.JSONDecodeError, KeyError, ValueError) as exc:
        raise CorruptFileError(f"bad meta block: {exc}") from exc
    return dim, count, meta


def load_index(path: str | Path) -> DenseIndex:
    """Read an index file back; rows are taken verbatim (no renormalization)."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoError(f"cannot read index {path}: {exc}") from exc
    with fh:
        dim, count, meta = read_index_header(fh)
        ids: list[str] = []
        rows = np.empty((count, dim), dtype=np.float32)
        row_bytes = 4 * dim
        for i in range(count):
            (id_len,) = _U32.unpack(_read_exact(fh, _U32.size, f"row {i} id length"))
            try:
                ids.append(_read_exact(fh, id_len, f"row {i} id").decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise InvalidUtf8Error(f"row {i} id is not valid UTF-8") from exc
            rows[i] = np.frombuffer(_read_exact(fh, row_bytes, f"row {i} data"), dtype="<f4")
        if fh.read(1):
            raise CorruptFileError("trailing bytes after final row")
    if count == 0:
        raise EmptyCorpusError(f"index {path} holds no rows")
    return DenseIndex(EmbeddingMatrix(tuple(ids), rows), meta)


def build_index_file(
    cemb_paths: str | Path | Sequence[str | Path],
    meta: IndexMeta,
    out_path: str | Path,
) -> tuple[int, int]:
    """Stream one or more .cemb files into an index file without loading
    all rows.

    Multiple inputs (exporter shards) are concatenated in argument order
    and must agree on dimensionality; ids must be unique across shards.
    Each row is unit-normalized (float64 math, float32 storage) on the way
    through.  Returns (total row count, dim).
    """
    if isinstance(cemb_paths, (str, Path)):
        cemb_paths = [cemb_paths]
    if not cemb_paths:
        raise EmptyCorpusError("no embedding files given")
    readers: list = []
    try:
        dim = None
        total = 0
        for path in cemb_paths:
            fh, shard_dim, shard_count = embfile.open_reader(path)
            readers.append((fh, path, shard_dim, shard_count))
            if dim is None:
                dim = shard_dim
            elif shard_dim != dim:
                raise DimMismatchError(dim, shard_dim)
            total += shard_count
        if total == 0:
            raise EmptyCorpusError("embedding files hold no rows")
        meta_bytes = json.dumps(meta.to_json(), ensure_ascii=False, sort_keys=True).encode("utf-8")
        seen: set[str] = set()
        try:
            with open(out_path, "wb") as out:
                out.write(_HEADER.pack(MAGIC, VERSION, dim, total))
                out.write(_U32.pack(len(meta_bytes)))
                out.write(meta_bytes)
                for fh, _path, shard_dim, shard_count in readers:
                    for row_id, vector in embfile.iter_rows(fh, shard_dim, shard_count):
                        if row_id in seen:
                            raise DuplicateIdError(row_id)
                        seen.add(row_id)
                        norm = float(np.linalg.norm(vector.astype(np.float64)))
                        if norm < 1e-12:
                            raise ZeroVectorError(row_id, norm)
                        unit = (vector.astype(np.float64) / norm).astype("<f4")
                        id_bytes = row_id.encode("utf-8")
                        out.write(_U32.pack(len(id_bytes)))
                        out.write(id_bytes)
                        out.write(unit.tobytes())
        except OSError as exc:
            raise IoError(f"cannot write index {out_path}: {exc}") from exc
    finally:
        for fh, *_ in readers:
            fh.close()
    return total, dim
