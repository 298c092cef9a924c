"""Writer (and verification reader) for the .cemb embeddings format.

Layout, all integers little-endian, no padding:

    magic "CEMB" (4 bytes) | u32 version=1 | u32 dim | u64 count
    per row: u32 id byte length | id bytes (UTF-8) | dim x float32

The format is the exporter's only contract with the consuming pipeline,
so this module implements it from the published layout rather than
importing the consumer's code.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .errors import InputFormatError

MAGIC = b"CEMB"
VERSION = 1
_HEADER = struct.Struct("<4sIIQ")
_U32 = struct.Struct("<I")


class CembWriter:
    """Single-writer streaming output; count and dim are fixed up front."""

    def __init__(self, path: str | Path, dim: int, count: int):
        self.path = Path(path)
        self.dim = dim
        self.count = count
        self.written = 0
        self._fh = open(path, "wb")
        self._fh.write(_HEADER.pack(MAGIC, VERSION, dim, count))

    def write_row(self, row_id: str, vector: np.ndarray) -> None:
        if self.written >= self.count:
            raise InputFormatError(f"more rows than declared count {self.count}")
        id_bytes = row_id.encode("utf-8")
        self._fh.write(_U32.pack(len(id_bytes)))
        self._fh.write(id_bytes)
        self._fh.write(np.ascontiguousarray(vector, dtype="<f4").tobytes())
        self.written += 1

    def close(self) -> None:
        self._fh.close()
        if self.written != self.count:
            raise InputFormatError(
                f"wrote {self.written} rows but declared {self.count} in {self.path}"
            )

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        if exc_type is None:
            self.close()
        else:
            self._fh.close()


def read_cemb(path: str | Path) -> tuple[list[str], np.ndarray]:
    """Read a .cemb file back (used by the exporter's own verification)."""
    data = Path(path).read_bytes()
    magic, version, dim, count = _HEADER.unpack_from(data, 0)
    if magic != MAGIC or version != VERSION:
        raise InputFormatError(f"{path} is not a version-{VERSION} .cemb file")
    offset = _HEADER.size
    ids: list[str] = []
    rows = np.empty((count, dim), dtype=np.float32)
    for i in range(count):
        (id_len,) = _U32.unpack_from(data, offset)
        offset += _U32.size
        ids.append(data[offset : offset + id_len].decode("utf-8"))
        offset += id_len
        rows[i] = np.frombuffer(data, dtype="<f4", count=dim, offset=offset)
        offset += 4 * dim
    if offset != len(data):
        raise InputFormatError(f"{path} has trailing bytes")
    return ids, rows
