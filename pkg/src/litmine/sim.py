"""Cosine-similarity top-k retrieval over a frozen vector table."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .embstore import WordVectorTable
from .errors import DegenerateVectorError, DimensionMismatchError, NotFoundError


@dataclass(slots=True, frozen=True)
class Neighbor:
    word: str
    similarity: float
    rank: int


def cosine(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """dot(a, b) / (|a| |b|), computed in float64 and clamped to [-1, 1].

    Zero-norm input raises rather than returning a silent 0.
    """
    av = np.asarray(a, dtype=np.float64)
    bv = np.asarray(b, dtype=np.float64)
    if av.shape != bv.shape:
        raise DimensionMismatchError(f"cosine of shapes {av.shape} and {bv.shape}")
    na = float(np.linalg.norm(av))
    nb = float(np.linalg.norm(bv))
    if na == 0.0 or nb == 0.0:
        raise DegenerateVectorError("cosine undefined for a zero-norm vector")
    value = float(np.dot(av, bv)) / (na * nb)
    return min(1.0, max(-1.0, value))


class SimilarityIndex:
    """Frozen search structure over a table's vectors.

    Rows are stored in sorted key order and L2-normalized once, so a query is
    a single matrix-vector product. The structure is immutable after
    construction and safe to query from concurrent workers.
    """

    def __init__(self, table: WordVectorTable):
        self.table = table
        self.keys: list[str] = sorted(table.entries)
        self._row_of = {key: i for i, key in enumerate(self.keys)}
        if self.keys:
            matrix = np.stack(
                [np.asarray(table.entries[k].vector, dtype=np.float64) for k in self.keys]
            )
            norms = np.linalg.norm(matrix, axis=1)
            zero = np.nonzero(norms == 0.0)[0]
            if zero.size:
                raise DegenerateVectorError(
                    f"entry {self.keys[int(zero[0])]!r} has a zero-norm vector"
                )
            self._unit = matrix / norms[:, None]
        else:
            self._unit = np.zeros((0, table.dim), dtype=np.float64)

    def __len__(self) -> int:
        return len(self.keys)

    def _query_unit(self, query: str | Sequence[float] | np.ndarray) -> tuple[np.ndarray, int | None]:
        """Unit query vector plus the row to self-exclude (None for raw vectors)."""
        if isinstance(query, str):
            key = self.table.canonical_key(query)
            if key is None:
                raise NotFoundError(f"unknown query key {query!r}")
            row = self._row_of[key]
            return self._unit[row], row
        vec = np.asarray(query, dtype=np.float64)
        if vec.shape != (self.table.dim,):
            raise DimensionMismatchError(
                f"query vector has shape {vec.shape}, table dim is {self.table.dim}"
            )
        norm = float(np.linalg.norm(vec))
        if norm == 0.0:
            raise DegenerateVectorError("query vector has zero norm")
        return vec / norm, None

    def top_k(
        self,
        query: str | Sequence[float] | np.ndarray,
        k: int,
        exclude: Iterable[str] = (),
    ) -> list[Neighbor]:
        """The k most cosine-similar entries to ``query``.

        The query's own canonical entry and every resolvable key in
        ``exclude`` are left out. Results are ordered by similarity
        descending, ties by key ascending, ranks 1..len. Fewer than k
        neighbors come back when the vocabulary is smaller.
        """
        if k < 1:
            raise ValueError(f"k must be positive, got {k}")
        unit_q, self_row = self._query_unit(query)
        sims = self._unit @ unit_q
        np.clip(sims, -1.0, 1.0, out=sims)

        excluded_rows = set()
        if self_row is not None:
            excluded_rows.add(self_row)
        for name in exclude:
            key = self.table.canonical_key(name)
            if key is not None:
                excluded_rows.add(self._row_of[key])
        if excluded_rows:
            sims[list(excluded_rows)] = -np.inf
        available = len(self.keys) - len(excluded_rows)
        take = min(k, available)
        if take <= 0:
            return []

        if take < available:
            head = np.argpartition(-sims, take - 1)[:take]
            floor = sims[head].min()
            pool = np.nonzero(sims >= floor)[0]
        else:
            pool = np.nonzero(sims > -np.inf)[0]
        # rows are in sorted-key order, so a stable sort on descending
        # similarity breaks ties by key ascending
        order = pool[np.argsort(-sims[pool], kind="stable")][:take]
        return [
            Neighbor(self.keys[row], float(sims[row]), rank)
            for rank, row in enumerate(order, start=1)
        ]


def top_k(
    table: WordVectorTable,
    query: str | Sequence[float] | np.ndarray,
    k: int,
    exclude: Iterable[str] = (),
) -> list[Neighbor]:
    """One-shot query; builds a throwaway index. Use SimilarityIndex directly
    when issuing many queries against the same table."""
    return SimilarityIndex(table).top_k(query, k, exclude)
