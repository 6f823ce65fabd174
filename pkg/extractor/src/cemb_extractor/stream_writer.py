"""Writer for the .cemb subword embedding stream.

Layout, little-endian:

    header:  magic ``CEMB``, version u16 (currently 1), dim u32
    record:  doc_id u32, seq_id u32, word_idx u32,
             name_len u16, name (UTF-8), vector (dim * f32)

Records must be appended grouped by (doc_id, seq_id, word_idx) in ascending
order; every consumer of the format relies on that ordering to rebuild word
occurrences. The writer enforces it so a bug upstream fails here rather than
in a reader far away.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

MAGIC = b"CEMB"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sHI")
_RECORD_FIXED = struct.Struct("<IIIH")


class CembWriter:
    """Single-owner append writer; use as a context manager."""

    def __init__(self, path: str | Path, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.count = 0
        self._last_key: tuple[int, int, int] | None = None
        self._fh = open(path, "wb")
        self._fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim))

    def write(
        self, doc_id: int, seq_id: int, word_idx: int, word: str, vector: np.ndarray
    ) -> None:
        key = (doc_id, seq_id, word_idx)
        if self._last_key is not None and key < self._last_key:
            raise ValueError(f"record key {key} after {self._last_key}; stream must be sorted")
        name = word.encode("utf-8")
        if not name:
            raise ValueError("word must be non-empty")
        vec = np.ascontiguousarray(vector, dtype="<f4")
        if vec.shape != (self.dim,):
            raise ValueError(f"vector shape {vec.shape} does not match dim {self.dim}")
        self._fh.write(_RECORD_FIXED.pack(doc_id, seq_id, word_idx, len(name)))
        self._fh.write(name)
        self._fh.write(vec.tobytes())
        self._last_key = key
        self.count += 1

    def close(self) -> None:
        self._fh.close()

    def __enter__(self) -> "CembWriter":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
