"""Precision/recall@k of a candidate list against a ground-truth target set.

Two matching criteria: exact membership, and fuzzy gene-family matching via
equality of the digit-free name prefixes (minimum shared prefix length 3).
A ground-truth target is credited at most once per evaluation, so fuzzy
matching cannot inflate recall past 1.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence, TextIO

from .discover import CandidateList, SeedSet, acquire, sample_seeds
from .embstore import WordVectorTable
from .errors import IntegrityError
from .sim import SimilarityIndex

MODES = ("exact", "fuzzy")
DEFAULT_KS = (100, 2802)
#: Shared digit-free prefixes shorter than this never fuzzy-match.
MIN_PREFIX_LEN = 3


def gene_prefix(name: str) -> str:
    """Characters before the first decimal digit; the whole name if digit-free."""
    for i, ch in enumerate(name):
        if ch.isdigit():
            return name[:i]
    return name


class GroundTruth:
    """Lowercased target-name set with a prefix index for fuzzy lookups."""

    def __init__(self, targets: Iterable[str]):
        self.targets = frozenset(t.lower() for t in targets)
        if not self.targets:
            raise IntegrityError("ground truth must be non-empty")
        self._by_prefix: dict[str, list[str]] = defaultdict(list)
        for t in self.targets:
            prefix = gene_prefix(t)
            if len(prefix) >= MIN_PREFIX_LEN:
                self._by_prefix[prefix].append(t)
        for members in self._by_prefix.values():
            members.sort()

    def __len__(self) -> int:
        return len(self.targets)

    def __contains__(self, name: str) -> bool:
        return name in self.targets

    def prefix_family(self, prefix: str) -> list[str]:
        """Targets whose digit-free prefix equals ``prefix`` (sorted), if it
        is long enough to count."""
        if len(prefix) < MIN_PREFIX_LEN:
            return []
        return self._by_prefix.get(prefix, [])


def load_ground_truth(source: str | Path | TextIO) -> GroundTruth:
    """One target name per line, ``#`` comments; duplicates collapse."""
    if isinstance(source, (str, Path)):
        with open(source, "r", encoding="utf-8") as fh:
            return load_ground_truth(fh)
    names = []
    for line in source:
        stripped = line.strip()
        if stripped and not stripped.startswith("#"):
            names.append(stripped.lower())
    return GroundTruth(names)


@dataclass(slots=True)
class MatchAnnotation:
    """Match outcome for one candidate under one evaluation mode.

    ``matched_target`` is present iff matched. ``prefix_used`` is set when
    the match came through the prefix rule (and is then at least
    MIN_PREFIX_LEN long); exact hits leave it None.
    """

    candidate: str
    matched: bool
    mode: str
    matched_target: str | None = None
    prefix_used: str | None = None


def match(candidate: str, truth: GroundTruth, mode: str) -> MatchAnnotation:
    """Stateless relevance test for a single candidate.

    Exact: membership in the target set. Fuzzy: exact, or some target shares
    the candidate's digit-free prefix (length >= 3). The witness is the
    lexicographically smallest matching target.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    name = candidate.lower()
    witnesses = []
    if name in truth.targets:
        witnesses.append(name)
    if mode == "fuzzy":
        witnesses.extend(truth.prefix_family(gene_prefix(name)))
    if not witnesses:
        return MatchAnnotation(name, False, mode)
    target = min(witnesses)
    return MatchAnnotation(
        name,
        True,
        mode,
        matched_target=target,
        prefix_used=gene_prefix(name) if target != name else None,
    )


def annotate(
    candidates: Sequence[str],
    truth: GroundTruth,
    mode: str,
    one_credit: bool = True,
) -> list[MatchAnnotation]:
    """Match candidates in rank order.

    With ``one_credit`` (the default) each target can witness only one
    candidate: a candidate matches the smallest not-yet-credited witness, and
    comes up empty if all its witnesses are spent.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}")
    claimed: set[str] = set()
    out = []
    for candidate in candidates:
        name = candidate.lower()
        witnesses = []
        if name in truth.targets and not (one_credit and name in claimed):
            witnesses.append(name)
        if mode == "fuzzy":
            family = truth.prefix_family(gene_prefix(name))
            if one_credit:
                family = [t for t in family if t not in claimed]
            witnesses.extend(family)
        if witnesses:
            target = min(witnesses)
            claimed.add(target)
            out.append(
                MatchAnnotation(
                    name,
                    True,
                    mode,
                    matched_target=target,
                    prefix_used=gene_prefix(name) if target != name else None,
                )
            )
        else:
            out.append(MatchAnnotation(name, False, mode))
    return out


@dataclass(slots=True, frozen=True)
class EvalEntry:
    k: int
    mode: str
    returned: int
    relevant: int
    precision: float
    recall: float
    ground_truth_size: int
    truncated: bool  # k exceeded the candidate list


@dataclass
class EvalReport:
    entries: list[EvalEntry]
    annotations: dict[str, list[MatchAnnotation]]


def _entry_from_annotations(
    annotations: Sequence[MatchAnnotation],
    truth_size: int,
    k: int,
    mode: str,
) -> EvalEntry:
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    returned = min(k, len(annotations))
    relevant = sum(1 for a in annotations[:returned] if a.matched)
    precision = relevant / returned if returned else 0.0
    recall = relevant / truth_size
    return EvalEntry(
        k=k,
        mode=mode,
        returned=returned,
        relevant=relevant,
        precision=precision,
        recall=recall,
        ground_truth_size=truth_size,
        truncated=k > len(annotations),
    )


def precision_recall_at_k(
    candidates: CandidateList | Sequence[str],
    truth: GroundTruth,
    k: int,
    mode: str,
    one_credit: bool = True,
) -> EvalEntry:
    """Single (k, mode) evaluation. An empty candidate list yields a defined
    0-returned entry instead of dividing by zero."""
    words = candidates.words() if isinstance(candidates, CandidateList) else list(candidates)
    return _entry_from_annotations(
        annotate(words, truth, mode, one_credit), len(truth), k, mode
    )


def evaluate(
    candidates: CandidateList | Sequence[str],
    truth: GroundTruth,
    ks: Sequence[int] = DEFAULT_KS,
    modes: Sequence[str] = MODES,
    one_credit: bool = True,
) -> EvalReport:
    """Full report over every (k, mode) pair, annotating once per mode."""
    words = candidates.words() if isinstance(candidates, CandidateList) else list(candidates)
    annotations = {mode: annotate(words, truth, mode, one_credit) for mode in modes}
    entries = [
        _entry_from_annotations(annotations[mode], len(truth), k, mode)
        for k in ks
        for mode in modes
    ]
    return EvalReport(entries=entries, annotations=annotations)


@dataclass(slots=True, frozen=True)
class SweepPoint:
    size: int
    precision: float
    recall: float


def seed_sweep(
    table: WordVectorTable,
    ranked_seeds: Sequence[str],
    sizes: Sequence[int],
    truth: GroundTruth,
    k: int,
    mode: str,
    per_seed_k: int = 2802,
    final_cut: int = 2802,
    threshold: float = 0.7,
    one_credit: bool = True,
    threads: int = 1,
) -> list[SweepPoint]:
    """Evaluate candidate acquisition at each seed-set size.

    Sizes must be strictly increasing; each run samples that many best-ranked
    seeds, acquires candidates, and scores them at ``k``.
    """
    if not sizes:
        raise ValueError("sizes must be non-empty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly increasing, got {list(sizes)}")
    index = SimilarityIndex(table)
    points = []
    for size in sizes:
        seeds = sample_seeds(ranked_seeds, size)
        clist = acquire(
            table,
            seeds,
            per_seed_k=per_seed_k,
            final_cut=final_cut,
            threshold=threshold,
            index=index,
            threads=threads,
        )
        entry = precision_recall_at_k(clist, truth, k, mode, one_credit)
        points.append(SweepPoint(size=size, precision=entry.precision, recall=entry.recall))
    return points


REPORT_TSV_HEADER = "k\tmode\treturned\trelevant\tprecision\trecall"
ANNOTATION_TSV_HEADER = "rank\tcandidate\tmode\tmatched\tmatched_target\tprefix_used"
SWEEP_TSV_HEADER = "size\tprecision\trecall"


def write_report(report: EvalReport, dest: str | Path | TextIO) -> None:
    """Report TSV with full-precision metric values."""
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            write_report(report, fh)
        return
    dest.write(REPORT_TSV_HEADER + "\n")
    for e in report.entries:
        dest.write(
            f"{e.k}\t{e.mode}\t{e.returned}\t{e.relevant}\t{e.precision!r}\t{e.recall!r}\n"
        )


def write_annotations(report: EvalReport, dest: str | Path | TextIO) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            write_annotations(report, fh)
        return
    dest.write(ANNOTATION_TSV_HEADER + "\n")
    for mode in report.annotations:
        for rank, a in enumerate(report.annotations[mode], start=1):
            dest.write(
                f"{rank}\t{a.candidate}\t{a.mode}\t{int(a.matched)}"
                f"\t{a.matched_target or ''}\t{a.prefix_used or ''}\n"
            )


def write_sweep(points: Sequence[SweepPoint], dest: str | Path | TextIO) -> None:
    if isinstance(dest, (str, Path)):
        with open(dest, "w", encoding="utf-8", newline="\n") as fh:
            write_sweep(points, fh)
        return
    dest.write(SWEEP_TSV_HEADER + "\n")
    for p in points:
        dest.write(f"{p.size}\t{p.precision!r}\t{p.recall!r}\n")
