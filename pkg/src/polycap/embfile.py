"""Reader/writer for the .cemb embeddings exchange format.

Layout (all integers little-endian, no padding):

    magic "CEMB" (4 bytes) | u32 version=1 | u32 dim | u64 count
    then per row: u32 id byte length | id bytes (UTF-8) | dim x float32

This is the raw-embedding sibling of the index format in ``index.py``:
a .cemb file carries whatever the exporter produced, while an index file
always holds unit-normalized rows plus metadata.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import BinaryIO, Iterator

import numpy as np

from .core import EmbeddingMatrix
from .errors import CorruptFileError, InvalidUtf8Error, IoError

MAGIC = b"CEMB"
VERSION = 1

_HEADER = struct.Struct("<4sIIQ")
_U32 = struct.Struct("<I")


def _read_exact(fh: BinaryIO, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise CorruptFileError(f"truncated file while reading {what}")
    return data


def write_header(fh: BinaryIO, dim: int, count: int) -> None:
    fh.write(_HEADER.pack(MAGIC, VERSION, dim, count))


def write_row(fh: BinaryIO, row_id: str, vector: np.ndarray) -> None:
    id_bytes = row_id.encode("utf-8")
    fh.write(_U32.pack(len(id_bytes)))
    fh.write(id_bytes)
    fh.write(np.ascontiguousarray(vector, dtype="<f4").tobytes())


def write_embeddings(path: str | Path, matrix: EmbeddingMatrix) -> None:
    """Write a whole EmbeddingMatrix as a .cemb file."""
    try:
        with open(path, "wb") as fh:
            write_header(fh, matrix.dim, len(matrix))
            for row_id, vector in zip(matrix.ids, matrix.rows):
                write_row(fh, row_id, vector)
    except OSError as exc:
        raise IoError(f"cannot write {path}: {exc}") from exc


def read_header(fh: BinaryIO) -> tuple[int, int]:
    """Validate the magic/version and return (dim, count)."""
    magic, version, dim, count = _HEADER.unpack(_read_exact(fh, _HEADER.size, "header"))
    if magic != MAGIC:
        raise CorruptFileError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != VERSION:
        raise CorruptFileError(f"unsupported .cemb version {version}")
    if dim < 1:
        raise CorruptFileError(f"bad dimension {dim}")
    return dim, count


def iter_rows(fh: BinaryIO, dim: int, count: int) -> Iterator[tuple[str, np.ndarray]]:
    """Yield (id, float32 vector) pairs; the header must already be consumed."""
    row_bytes = 4 * dim
    for i in range(count):
        (id_len,) = _U32.unpack(_read_exact(fh, _U32.size, f"row {i} id length"))
        try:
            row_id = _read_exact(fh, id_len, f"row {i} id").decode("utf-8")
        except UnicodeDecodeError as exc:
            raise InvalidUtf8Error(f"row {i} id is not valid UTF-8") from exc
        vector = np.frombuffer(_read_exact(fh, row_bytes, f"row {i} data"), dtype="<f4")
        yield row_id, vector
    if fh.read(1):
        raise CorruptFileError("trailing bytes after final row")


def read_embeddings(path: str | Path) -> EmbeddingMatrix:
    """Read a whole .cemb file into an EmbeddingMatrix."""
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    with fh:
        dim, count = read_header(fh)
        ids: list[str] = []
        rows = np.empty((count, dim), dtype=np.float32)
        for i, (row_id, vector) in enumerate(iter_rows(fh, dim, count)):
            ids.append(row_id)
            rows[i] = vector
    return EmbeddingMatrix(tuple(ids), rows)


def open_reader(path: str | Path) -> tuple[BinaryIO, int, int]:
    """Open a .cemb file for streaming: returns (handle, dim, count).

    The caller owns the handle and should wrap iteration via iter_rows().
    """
    try:
        fh = open(path, "rb")
    except OSError as exc:
        raise IoError(f"cannot read {path}: {exc}") from exc
    try:
        dim, count = read_header(fh)
    except Exception:
        fh.close()
        raise
    return fh, dim, count
