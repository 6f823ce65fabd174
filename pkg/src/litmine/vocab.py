"""Gene synonym resolution over a word-vector table.

All names that refer to the same gene are pooled into a single canonical
entry; the synonyms stay queryable as aliases so seed files may use any
member name, but only canonical symbols ever appear in ranked output.
"""

from __future__ import annotations

from pathlib import Path
from typing import Iterator, TextIO

import numpy as np

from .embstore import WordEntry, WordVectorTable
from .errors import IntegrityError, ParseError


class SynonymTable:
    """Canonical gene symbol -> ordered member names, plus the reverse index.

    Every canonical symbol is a member of its own group, and a member name
    belongs to at most one group.
    """

    def __init__(self) -> None:
        self.groups: dict[str, tuple[str, ...]] = {}
        self.reverse: dict[str, str] = {}

    def __len__(self) -> int:
        return len(self.groups)

    def __contains__(self, name: str) -> bool:
        return name in self.reverse

    def canonical_for(self, name: str) -> str | None:
        return self.reverse.get(name)

    def add_group(self, canonical: str, synonyms: Iterator[str] | list[str]) -> None:
        members: list[str] = [canonical]
        for name in synonyms:
            if name and name not in members:
                members.append(name)
        for name in members:
            owner = self.reverse.get(name)
            if owner is not None:
                raise IntegrityError(
                    f"name {name!r} already belongs to group {owner!r}"
                )
        self.groups[canonical] = tuple(members)
        for name in members:
            self.reverse[name] = canonical


def load_synonyms(source: str | Path | TextIO) -> SynonymTable:
    """Parse the synonym TSV: canonical symbol, then tab-separated synonyms.

    Names are lowercased; ``#`` lines are comments. A name claimed by two
    groups is an integrity error.
    """
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_synonyms(fh)

    table = SynonymTable()
    for lineno, line in enumerate(source, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        fields = [f.strip().lower() for f in line.rstrip("\n").split("\t")]
        canonical = fields[0]
        if not canonical:
            raise ParseError("empty canonical symbol", line=lineno)
        try:
            table.add_group(canonical, [f for f in fields[1:] if f])
        except IntegrityError as exc:
            raise IntegrityError(f"line {lineno}: {exc}") from None
    return table


class ResolvedVectorTable(WordVectorTable):
    """A word-vector table in which synonym groups collapsed to canonical entries.

    ``aliases`` maps every non-canonical member of a resolved group to its
    canonical entry key; lookups through either name return the same entry.
    """

    def __init__(
        self,
        dim: int,
        entries: dict[str, WordEntry] | None = None,
        aliases: dict[str, str] | None = None,
    ):
        super().__init__(dim, entries)
        self.aliases: dict[str, str] = aliases if aliases is not None else {}

    def canonical_key(self, name: str) -> str | None:
        if name in self.entries:
            return name
        return self.aliases.get(name)

    def __contains__(self, name: str) -> bool:
        return name in self.entries or name in self.aliases

    def get(self, name: str) -> WordEntry | None:
        key = self.canonical_key(name)
        return None if key is None else self.entries[key]


def resolve(
    table: WordVectorTable, syns: SynonymTable | None = None, weighted: bool = True
) -> ResolvedVectorTable:
    """Collapse each synonym group with at least one member in ``table``.

    The canonical vector is the occurrence-count-weighted mean of the member
    vectors (equivalent to pooling all contextual occurrences of all
    synonyms); ``weighted=False`` switches to a plain mean of member vectors.
    The canonical count is always the sum of member counts, so total
    occurrence mass is conserved. Members are averaged in sorted name order,
    making the result independent of group declaration order. Groups with no
    member in the table contribute nothing. Words outside every group are
    untouched.
    """
    entries = dict(table.entries)
    aliases: dict[str, str] = {}
    if syns is None:
        return ResolvedVectorTable(table.dim, entries, aliases)

    for canonical, members in syns.groups.items():
        present = sorted(m for m in members if m in entries)
        if not present:
            continue
        if present == [canonical]:
            merged = entries[canonical]  # already canonical-only: keep bit-exact
        else:
            total = sum(entries[m].count for m in present)
            if weighted:
                pooled = np.zeros(table.dim, dtype=np.float64)
                for m in present:
                    pooled += entries[m].count * np.asarray(
                        entries[m].vector, dtype=np.float64
                    )
                vector = pooled / total
            else:
                pooled = np.zeros(table.dim, dtype=np.float64)
                for m in present:
                    pooled += np.asarray(entries[m].vector, dtype=np.float64)
                vector = pooled / len(present)
            merged = WordEntry(vector, total)
        for m in present:
            del entries[m]
        entries[canonical] = merged
        for m in members:
            if m != canonical:
                aliases[m] = canonical
    return ResolvedVectorTable(table.dim, entries, aliases)
