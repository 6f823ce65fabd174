"""Contextual-embedding stream format and word-vector aggregation.

A ``.cemb`` stream carries one record per subword occurrence, tagged with its
position in the corpus. This module reads and writes that format, rebuilds
word-level occurrence vectors from subword pieces, and folds the occurrence
stream into one static vector per word via a mergeable (sum, count)
accumulator, so shards of a stream can be aggregated on separate workers and
combined afterwards.

Binary layout (little-endian throughout):

    header:  magic ``CEMB`` (4 bytes), version u16, dim u32
    record:  doc_id u32, seq_id u32, word_idx u32,
             name_len u16, name (UTF-8, name_len bytes),
             vector (dim * f32)

Records are sorted by ``(doc_id, seq_id, word_idx)``; all records sharing
that key are the subword pieces of a single word occurrence. The reader
enforces the sort order, which is a cheap superset check of the grouping
contract every writer guarantees.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, TextIO

import numpy as np

from .errors import (
    CorruptStreamError,
    DimensionMismatchError,
    FormatError,
    ParseError,
    StreamOrderError,
)

MAGIC = b"CEMB"
FORMAT_VERSION = 1

#: Words seen fewer times than this are dropped at aggregation time.
DEFAULT_MIN_COUNT = 5

_HEADER = struct.Struct("<4sHI")
_RECORD_FIXED = struct.Struct("<IIIH")


@dataclass(slots=True)
class StreamHeader:
    format_version: int
    dim: int


@dataclass(slots=True)
class EmbeddingRecord:
    """One subword occurrence: position key plus its dense vector."""

    doc_id: int
    seq_id: int
    word_idx: int
    word_text: str
    vector: np.ndarray

    @property
    def key(self) -> tuple[int, int, int]:
        return (self.doc_id, self.seq_id, self.word_idx)


def read_header(source: BinaryIO) -> StreamHeader:
    """Read and validate the stream header, leaving ``source`` at the first record."""
    raw = source.read(_HEADER.size)
    if len(raw) < _HEADER.size:
        raise FormatError(f"stream too short for a header ({len(raw)} bytes)")
    magic, version, dim = _HEADER.unpack(raw)
    if magic != MAGIC:
        raise FormatError(f"bad magic {magic!r}, expected {MAGIC!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported format version {version}")
    if dim < 1:
        raise FormatError(f"invalid dimensionality {dim}")
    return StreamHeader(format_version=version, dim=dim)


class StreamReader:
    """Iterate the records of a ``.cemb`` stream.

    The header is parsed eagerly on construction; records are decoded lazily.
    ``records_read`` reports how many records have been yielded so far, i.e.
    the total record count once iteration is exhausted.
    """

    def __init__(self, source: BinaryIO):
        self._source = source
        self.header = read_header(source)
        self.records_read = 0
        self._offset = _HEADER.size

    def __iter__(self) -> Iterator[EmbeddingRecord]:
        src = self._source
        dim = self.header.dim
        vec_size = dim * 4
        fixed = _RECORD_FIXED
        while True:
            start = self._offset
            head = src.read(fixed.size)
            if not head:
                return
            if len(head) < fixed.size:
                raise CorruptStreamError("truncated record", offset=start)
            doc_id, seq_id, word_idx, name_len = fixed.unpack(head)
            if name_len == 0:
                raise CorruptStreamError("empty word text", offset=start)
            body = src.read(name_len + vec_size)
            if len(body) < name_len + vec_size:
                raise CorruptStreamError("truncated record", offset=start)
            try:
                word = body[:name_len].decode("utf-8")
            except UnicodeDecodeError:
                raise CorruptStreamError("invalid UTF-8 in word text", offset=start)
            if any(ch.isspace() for ch in word):
                raise CorruptStreamError(
                    f"word text {word!r} contains whitespace", offset=start
                )
            vector = np.frombuffer(body, dtype="<f4", count=dim, offset=name_len)
            self._offset = start + fixed.size + name_len + vec_size
            self.records_read += 1
            yield EmbeddingRecord(doc_id, seq_id, word_idx, word, vector)


def open_stream(path: str | Path) -> StreamReader:
    """Open a ``.cemb`` file for reading. The caller owns no file handle;
    it is closed when the reader is garbage-collected or the file ends."""
    return StreamReader(open(path, "rb"))


class StreamWriter:
    """Append records to a ``.cemb`` stream, writing the header up front."""

    def __init__(self, dest: BinaryIO, dim: int):
        if dim < 1:
            raise ValueError(f"dim must be positive, got {dim}")
        self._dest = dest
        self.dim = dim
        self.count = 0
        dest.write(_HEADER.pack(MAGIC, FORMAT_VERSION, dim))

    def write(self, record: EmbeddingRecord) -> None:
        name = record.word_text.encode("utf-8")
        if not name:
            raise ValueError("word_text must be non-empty")
        vec = np.asarray(record.vector, dtype="<f4")
        if vec.shape != (self.dim,):
            raise DimensionMismatchError(
                f"record vector has shape {vec.shape}, stream dim is {self.dim}"
            )
        self._dest.write(
            _RECORD_FIXED.pack(record.doc_id, record.seq_id, record.word_idx, len(name))
        )
        self._dest.write(name)
        self._dest.write(vec.tobytes())
        self.count += 1


def write_stream(dest: str | Path | BinaryIO, dim: int, records: Iterable[EmbeddingRecord]) -> int:
    """Write a whole stream; returns the number of records written."""
    if isinstance(dest, (str, Path)):
        with open(dest, "wb") as fh:
            return write_stream(fh, dim, records)
    writer = StreamWriter(dest, dim)
    for rec in records:
        writer.write(rec)
    return writer.count


def reconstruct_words(
    records: Iterable[EmbeddingRecord],
) -> Iterator[tuple[str, np.ndarray]]:
    """Collapse subword records into word occurrences.

    Each maximal run of records sharing ``(doc_id, seq_id, word_idx)`` yields
    one ``(word_text, vector)`` pair whose vector is the element-wise mean of
    the run's subword vectors, computed in float64. Raises
    :class:`StreamOrderError` if group keys are not sorted (a key appearing
    again after its group closed can never be merged back).
    """
    current_key: tuple[int, int, int] | None = None
    current_word = ""
    total: np.ndarray | None = None
    n = 0
    for rec in records:
        key = rec.key
        if key == current_key:
            if rec.word_text != current_word:
                raise CorruptStreamError(
                    f"group {key} mixes words {current_word!r} and {rec.word_text!r}"
                )
            total += rec.vector
            n += 1
            continue
        if current_key is not None:
            if key < current_key:
                raise StreamOrderError(
                    f"record key {key} after {current_key}; stream not sorted"
                )
            yield current_word, total / n
        current_key = key
        current_word = rec.word_text
        total = np.asarray(rec.vector, dtype=np.float64).copy()
        n = 1
    if current_key is not None:
        yield current_word, total / n


@dataclass(slots=True)
class WordEntry:
    vector: np.ndarray
    count: int


class WordVectorTable:
    """Finalized static vectors: one entry per retained vocabulary word."""

    def __init__(self, dim: int, entries: dict[str, WordEntry] | None = None):
        self.dim = dim
        self.entries: dict[str, WordEntry] = entries if entries is not None else {}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, word: str) -> bool:
        return word in self.entries

    def get(self, word: str) -> WordEntry | None:
        return self.entries.get(word)

    def canonical_key(self, name: str) -> str | None:
        """Entry key under which ``name`` is stored, or None if unknown."""
        return name if name in self.entries else None

    def words(self) -> Iterator[str]:
        return iter(self.entries)


class Accumulator:
    """Running (sum, count) per word; the mergeable unit of aggregation.

    Sums are kept in float64 regardless of the stream's storage precision so
    that any sharding of the stream reproduces the single-pass result within
    tight tolerance.
    """

    def __init__(self, dim: int | None = None):
        self.dim = dim
        self._sums: dict[str, np.ndarray] = {}
        self._counts: dict[str, int] = {}

    def __len__(self) -> int:
        return len(self._sums)

    def add(self, word: str, vector: np.ndarray) -> None:
        vec = np.asarray(vector, dtype=np.float64)
        if self.dim is None:
            self.dim = vec.shape[0]
        elif vec.shape != (self.dim,):
            raise DimensionMismatchError(
                f"occurrence vector has shape {vec.shape}, accumulator dim is {self.dim}"
            )
        existing = self._sums.get(word)
        if existing is None:
            self._sums[word] = vec.copy()
            self._counts[word] = 1
        else:
            existing += vec
            self._counts[word] += 1

    def update(self, other: "Accumulator") -> None:
        """Fold ``other`` into this accumulator in place."""
        if other.dim is None:
            return
        if self.dim is None:
            self.dim = other.dim
        elif self.dim != other.dim:
            raise DimensionMismatchError(
                f"cannot merge accumulators of dim {self.dim} and {other.dim}"
            )
        for word, vec in other._sums.items():
            mine = self._sums.get(word)
            if mine is None:
                self._sums[word] = vec.copy()
                self._counts[word] = other._counts[word]
            else:
                mine += vec
                self._counts[word] += other._counts[word]

    def sum_and_count(self, word: str) -> tuple[np.ndarray, int]:
        return self._sums[word], self._counts[word]

    def finalize(self, min_count: int = DEFAULT_MIN_COUNT) -> WordVectorTable:
        """Mean per word, dropping words with fewer than ``min_count`` occurrences."""
        if min_count < 1:
            raise ValueError(f"min_count must be positive, got {min_count}")
        entries = {
            word: WordEntry(self._sums[word] / n, n)
            for word, n in self._counts.items()
            if n >= min_count
        }
        return WordVectorTable(self.dim if self.dim is not None else 0, entries)


def merge_accumulators(a: Accumulator, b: Accumulator) -> Accumulator:
    """Combine two accumulators into a new one. Commutative and associative."""
    merged = Accumulator(a.dim if a.dim is not None else b.dim)
    merged.update(a)
    merged.update(b)
    return merged


def aggregate(
    occurrences: Iterable[tuple[str, np.ndarray]],
    min_count: int = DEFAULT_MIN_COUNT,
) -> WordVectorTable:
    """Fold word occurrences into a table of per-word mean vectors."""
    acc = Accumulator()
    for word, vec in occurrences:
        acc.add(word, vec)
    return acc.finalize(min_count)


def load_text_vectors(
    source: str | Path | TextIO, count: int = DEFAULT_MIN_COUNT
) -> WordVectorTable:
    """Parse the plain-text vector format: ``<word_count> <dim>`` header line,
    then one ``word v1 ... v_dim`` line per word.

    Occurrence counts are unknown for externally trained vectors, so every
    entry's count is pinned to ``count``.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_text_vectors(fh, count)

    header = source.readline()
    if not header:
        raise ParseError("empty vector file", line=1)
    fields = header.split()
    if len(fields) != 2:
        raise ParseError(f"expected '<count> <dim>' header, got {header!r}", line=1)
    try:
        declared, dim = int(fields[0]), int(fields[1])
    except ValueError:
        raise ParseError(f"non-integer header fields {header!r}", line=1)
    if dim < 1:
        raise ParseError(f"invalid dimensionality {dim}", line=1)

    entries: dict[str, WordEntry] = {}
    lineno = 1
    for line in source:
        lineno += 1
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != dim + 1:
            raise ParseError(
                f"expected 1 word + {dim} coordinates, got {len(parts)} fields",
                line=lineno,
            )
        word = parts[0]
        try:
            vec = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise ParseError("unparseable coordinate", line=lineno)
        if not np.all(np.isfinite(vec)):
            raise ParseError(f"non-finite coordinate for {word!r}", line=lineno)
        if word in entries:
            raise ParseError(f"duplicate word {word!r}", line=lineno)
        entries[word] = WordEntry(vec, count)
    if len(entries) != declared:
        raise ParseError(
            f"header declares {declared} words but file contains {len(entries)}"
        )
    return WordVectorTable(dim, entries)


def write_text_vectors(table: WordVectorTable, dest: str | Path | TextIO) -> None:
    """Write the text vector format, entries sorted by word for reproducibility.

    Coordinates use shortest round-trip float formatting, so a load/write
    cycle is lossless.
    """
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            write_text_vectors(table, fh)
        return
    dest.write(f"{len(table.entries)} {table.dim}\n")
    for word in sorted(table.entries):
        coords = " ".join(repr(float(x)) for x in table.entries[word].vector)
        dest.write(f"{word} {coords}\n")


_COUNTS_MAGIC = b"CCNT"
_COUNTS_HEADER = struct.Struct("<4sHI")


def write_count_sidecar(table: WordVectorTable, dest: str | Path | BinaryIO) -> None:
    """Binary sidecar preserving occurrence counts next to a text vector file."""
    if isinstance(dest, (str, Path)):
        with open(dest, "wb") as fh:
            write_count_sidecar(table, fh)
        return
    dest.write(_COUNTS_HEADER.pack(_COUNTS_MAGIC, FORMAT_VERSION, len(table.entries)))
    for word in sorted(table.entries):
        name = word.encode("utf-8")
        dest.write(struct.pack("<H", len(name)))
        dest.write(name)
        dest.write(struct.pack("<Q", table.entries[word].count))


def read_count_sidecar(source: str | Path | BinaryIO) -> dict[str, int]:
    if isinstance(source, (str, Path)):
        with open(source, "rb") as fh:
            return read_count_sidecar(fh)
    raw = source.read(_COUNTS_HEADER.size)
    if len(raw) < _COUNTS_HEADER.size:
        raise FormatError("count sidecar too short for a header")
    magic, version, n = _COUNTS_HEADER.unpack(raw)
    if magic != _COUNTS_MAGIC:
        raise FormatError(f"bad sidecar magic {magic!r}")
    if version != FORMAT_VERSION:
        raise FormatError(f"unsupported sidecar version {version}")
    counts: dict[str, int] = {}
    for _ in range(n):
        head = source.read(2)
        if len(head) < 2:
            raise CorruptStreamError("truncated sidecar entry")
        (name_len,) = struct.unpack("<H", head)
        body = source.read(name_len + 8)
        if len(body) < name_len + 8:
            raise CorruptStreamError("truncated sidecar entry")
        word = body[:name_len].decode("utf-8")
        (counts[word],) = struct.unpack("<Q", body[name_len:])
    return counts


def apply_counts(table: WordVectorTable, counts: dict[str, int]) -> None:
    """Overwrite entry counts in place for words present in ``counts``."""
    for word, entry in table.entries.items():
        if word in counts:
            entry.count = counts[word]
