"""Candidate acquisition: per-seed neighbor lists, average-rank fusion,
near-duplicate name filtering, truncation.

The name filter uses ``name_overlap`` = 1 - LD / max(len), a similarity in
[0, 1]; candidates whose overlap with a seed or an already-kept candidate
exceeds the threshold are discarded, scanning from the best-ranked candidate
down.
"""

from __future__ import annotations

from collections import defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .embstore import WordVectorTable
from .errors import IntegrityError, NotFoundError, ParseError
from .sim import Neighbor, SimilarityIndex

#: Neighbors fetched per seed, and the final list length (both default to the
#: ground-truth target count).
DEFAULT_PER_SEED_K = 2802
DEFAULT_FINAL_CUT = 2802
#: name_overlap above this marks a near-duplicate name.
DEFAULT_OVERLAP_THRESHOLD = 0.7


def levenshtein(w1: str, w2: str) -> int:
    """Unit-cost edit distance (insert / delete / substitute)."""
    if w1 == w2:
        return 0
    if len(w1) < len(w2):
        w1, w2 = w2, w1
    if not w2:
        return len(w1)
    previous = list(range(len(w2) + 1))
    for i, c1 in enumerate(w1, start=1):
        current = [i]
        for j, c2 in enumerate(w2, start=1):
            current.append(
                min(
                    current[j - 1] + 1,
                    previous[j] + 1,
                    previous[j - 1] + (c1 != c2),
                )
            )
        previous = current
    return previous[-1]


def levenshtein_within(w1: str, w2: str, limit: int) -> int | None:
    """Edit distance if it is <= ``limit``, else None.

    Banded dynamic program: cells further than ``limit`` off the diagonal can
    never contribute to a distance within the limit, so rows are clipped to a
    2*limit+1 window and the scan aborts once a whole row exceeds the limit.
    """
    if limit < 0:
        return None
    if w1 == w2:
        return 0
    if len(w1) < len(w2):
        w1, w2 = w2, w1
    n, m = len(w1), len(w2)
    if n - m > limit:
        return None
    big = limit + 1
    previous = [j if j <= limit else big for j in range(m + 1)]
    for i in range(1, n + 1):
        lo = max(1, i - limit)
        hi = min(m, i + limit)
        current = [big] * (m + 1)
        if lo == 1:
            current[0] = i if i <= limit else big
        c1 = w1[i - 1]
        best = current[0] if lo == 1 else big
        for j in range(lo, hi + 1):
            cost = min(
                current[j - 1] + 1,
                previous[j] + 1,
                previous[j - 1] + (c1 != w2[j - 1]),
            )
            if cost > big:
                cost = big
            current[j] = cost
            if cost < best:
                best = cost
        if best > limit:
            return None
        previous = current
    return previous[m] if previous[m] <= limit else None


def name_overlap(w1: str, w2: str) -> float:
    """1 - LD / max(len(w1), len(w2)): 1.0 for identical strings, 0.0 for
    totally dissimilar strings of equal length. Grows with similarity."""
    longest = max(len(w1), len(w2))
    if longest == 0:
        raise ValueError("name_overlap undefined for two empty strings")
    return 1.0 - levenshtein(w1, w2) / longest


def _max_discard_distance(longest: int, threshold: float) -> int:
    """Largest edit distance whose overlap still exceeds ``threshold``
    for strings of maximum length ``longest`` (-1 if none does).

    Derived from the same float expression ``name_overlap`` evaluates, so the
    banded shortcut and the formula agree on every boundary case.
    """
    d = -1
    while d + 1 <= longest and 1.0 - (d + 1) / longest > threshold:
        d += 1
    return d


def _near_duplicate(w1: str, w2: str, threshold: float) -> bool:
    """True iff name_overlap(w1, w2) > threshold, without a full DP when the
    lengths alone settle it."""
    longest = max(len(w1), len(w2))
    cutoff = _max_discard_distance(longest, threshold)
    if cutoff < 0 or abs(len(w1) - len(w2)) > cutoff:
        return False
    return levenshtein_within(w1, w2, cutoff) is not None


@dataclass(slots=True)
class FusedCandidate:
    word: str
    avg_rank: float
    support: int
    best_similarity: float


@dataclass
class SeedSet:
    """Ordered seed names with a free-text provenance label."""

    seeds: list[str]
    label: str = ""

    def __post_init__(self) -> None:
        if not self.seeds:
            raise ValueError("seed set must be non-empty")

    def __len__(self) -> int:
        return len(self.seeds)


def sample_seeds(ranked: Sequence[str], size: int, label: str = "") -> SeedSet:
    """First ``size`` names of a pre-ranked seed list, order preserved."""
    if size < 1:
        raise ValueError(f"sample size must be positive, got {size}")
    if size > len(ranked):
        raise ValueError(
            f"sample size {size} exceeds ranked list length {len(ranked)}"
        )
    return SeedSet(list(ranked[:size]), label=label)


def load_seed_list(source: str | Path | TextIO) -> list[str]:
    """One name per line, ``#`` comments, lowercased; order preserved."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_seed_list(fh)
    names = []
    for line in source:
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            names.append(stripped.lower())
    return names


def fuse(per_seed: Sequence[tuple[str, Sequence[Neighbor]]]) -> list[FusedCandidate]:
    """Merge per-seed neighbor lists by average rank.

    A word's ``avg_rank`` is the mean of its ranks over the lists it appears
    in; ``support`` counts those lists. Output is sorted by (avg_rank
    ascending, support descending, word ascending).
    """
    if not per_seed:
        raise ValueError("fuse requires at least one per-seed neighbor list")
    rank_sum: dict[str, int] = defaultdict(int)
    appearances: dict[str, int] = defaultdict(int)
    best_sim: dict[str, float] = {}
    for _seed, neighbors in per_seed:
        for nb in neighbors:
            rank_sum[nb.word] += nb.rank
            appearances[nb.word] += 1
            if nb.word not in best_sim or nb.similarity > best_sim[nb.word]:
                best_sim[nb.word] = nb.similarity
    fused = [
        FusedCandidate(word, rank_sum[word] / appearances[word], appearances[word], best_sim[word])
        for word in rank_sum
    ]
    fused.sort(key=lambda c: (c.avg_rank, -c.support, c.word))
    return fused


def name_filter(
    candidates: Iterable[FusedCandidate],
    seeds: SeedSet | Iterable[str],
    threshold: float = DEFAULT_OVERLAP_THRESHOLD,
) -> list[FusedCandidate]:
    """Drop candidates whose name is a near-duplicate of a seed or of an
    already-kept candidate, scanning best-first. Comparison is strict:
    overlap equal to the threshold keeps the candidate.
    """
    if not 0.0 < threshold <= 1.0:
        raise ValueError(f"threshold must be in (0, 1], got {threshold}")
    seed_words = list(seeds.seeds) if isinstance(seeds, SeedSet) else list(seeds)
    # bucket comparison words by length: a candidate can only collide with
    # words whose length is within the discard window for the longer of the two
    by_length: dict[int, list[str]] = defaultdict(list)
    for w in seed_words:
        by_length[len(w)].append(w)

    kept: list[FusedCandidate] = []
    for cand in candidates:
        n = len(cand.word)
        collided = False
        for length, words in by_length.items():
            if _max_discard_distance(max(n, length), threshold) < abs(n - length):
                continue
            if any(_near_duplicate(cand.word, w, threshold) for w in words):
                collided = True
                break
        if not collided:
            kept.append(cand)
            by_length[n].append(cand.word)
    return kept


@dataclass
class CandidateList:
    """Final ranked discovery output plus the parameters that produced it."""

    candidates: list[FusedCandidate]
    provenance: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.candidates)

    def words(self) -> list[str]:
        return [c.word for c in self.candidates]


def acquire(
    table: WordVectorTable,
    seeds: SeedSet,
    per_seed_k: int = DEFAULT_PER_SEED_K,
    final_cut: int = DEFAULT_FINAL_CUT,
    threshold: float = DEFAULT_OVERLAP_THRESHOLD,
    index: SimilarityIndex | None = None,
    threads: int = 1,
) -> CandidateList:
    """End-to-end candidate acquisition for one seed set.

    Each seed's ``per_seed_k`` nearest entries are fetched (the whole seed
    set excluded), fused by average rank, name-filtered against the seeds and
    the growing kept list, and cut to ``final_cut``.
    """
    if per_seed_k < 1:
        raise ValueError(f"per_seed_k must be positive, got {per_seed_k}")
    if final_cut < 1:
        raise ValueError(f"final_cut must be positive, got {final_cut}")
    canonical: list[str] = []
    for name in seeds.seeds:
        key = table.canonical_key(name.lower())
        if key is None:
            raise NotFoundError(f"seed {name!r} not in the vector table")
        if key in canonical:
            raise IntegrityError(
                f"seed {name!r} duplicates {key!r} after synonym resolution"
            )
        canonical.append(key)

    if index is None:
        index = SimilarityIndex(table)
    if threads > 1 and len(canonical) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            lists = list(
                pool.map(lambda s: index.top_k(s, per_seed_k, exclude=canonical), canonical)
            )
        per_seed = list(zip(canonical, lists))
    else:
        per_seed = [
            (seed, index.top_k(seed, per_seed_k, exclude=canonical))
            for seed in canonical
        ]
    fused = fuse(per_seed)
    filtered = name_filter(fused, canonical, threshold)
    return CandidateList(
        candidates=filtered[:final_cut],
        provenance={
            "seeds": canonical,
            "seed_label": seeds.label,
            "per_seed_k": per_seed_k,
            "final_cut": final_cut,
            "overlap_threshold": threshold,
        },
    )


CANDIDATE_TSV_HEADER = "rank\tcandidate\tavg_rank\tsupport\tbest_similarity"


def write_candidates(clist: CandidateList, dest: str | Path | TextIO) -> None:
    """Candidate TSV: one row per kept candidate, floats in shortest
    round-trip form so identical runs are byte-identical."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            write_candidates(clist, fh)
        return
    dest.write(CANDIDATE_TSV_HEADER + "\n")
    for rank, c in enumerate(clist.candidates, start=1):
        dest.write(
            f"{rank}\t{c.word}\t{c.avg_rank!r}\t{c.support}\t{c.best_similarity!r}\n"
        )


def read_candidates(source: str | Path | TextIO) -> CandidateList:
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return read_candidates(fh)
    header = source.readline().rstrip("\n")
    if header != CANDIDATE_TSV_HEADER:
        raise ParseError(f"unexpected candidate TSV header {header!r}", line=1)
    out: list[FusedCandidate] = []
    for lineno, line in enumerate(source, start=2):
        if not line.strip():
            continue
        fields = line.rstrip("\n").split("\t")
        if len(fields) != 5:
            raise ParseError(f"expected 5 fields, got {len(fields)}", line=lineno)
        try:
            rank = int(fields[0])
            cand = FusedCandidate(
                fields[1], float(fields[2]), int(fields[3]), float(fields[4])
            )
        except ValueError:
            raise ParseError("unparseable candidate row", line=lineno)
        if rank != len(out) + 1:
            raise ParseError(f"rank {rank} out of sequence", line=lineno)
        out.append(cand)
    return CandidateList(candidates=out)
