"""Command-line pipeline runner.

Subcommands mirror the pipeline stages: ``aggregate`` folds embedding
streams into a text vector file, ``discover`` produces a ranked candidate
TSV from seeds, ``evaluate`` scores a candidate TSV against ground truth,
and ``sweep`` repeats discovery over growing seed-set sizes. Every output
gets a JSON manifest recording parameters and input digests so a run can be
audited and reproduced; identical inputs and flags give byte-identical
outputs.

Exit codes: 0 success, 1 I/O or unexpected failure, 2 usage, 3 parse or
format error, 4 integrity error, 5 unknown key.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from . import discover as disc
from . import embstore, evaluation, vocab
from .errors import (
    CorruptStreamError,
    DegenerateVectorError,
    DimensionMismatchError,
    FormatError,
    IntegrityError,
    NotFoundError,
    ParseError,
    StreamOrderError,
)
from .sim import SimilarityIndex

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2
EXIT_FORMAT = 3
EXIT_INTEGRITY = 4
EXIT_NOT_FOUND = 5

DATA_DIR_ENV = "LITMINE_DATA_DIR"


def _resolve_input(path: str) -> Path:
    """Resolve an input path, falling back to $LITMINE_DATA_DIR for relative
    paths that do not exist from the working directory."""
    p = Path(path)
    if p.exists() or p.is_absolute():
        return p
    base = os.environ.get(DATA_DIR_ENV)
    if base:
        candidate = Path(base) / p
        if candidate.exists():
            return candidate
    return p


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def write_manifest(
    out_path: Path,
    subcommand: str,
    parameters: dict,
    inputs: Sequence[Path],
    outputs: Sequence[Path],
) -> Path:
    """Write ``<out>.manifest.json`` next to an output file.

    The manifest digest covers everything except the creation timestamp, so
    two identical runs agree on all content-bearing fields.
    """
    body = {
        "tool": "litmine",
        "version": __version__,
        "subcommand": subcommand,
        "parameters": parameters,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
    }
    canonical = json.dumps(body, sort_keys=True, separators=(",", ":"))
    body["manifest_digest"] = "sha256:" + hashlib.sha256(canonical.encode()).hexdigest()
    body["created"] = datetime.now(timezone.utc).isoformat()
    manifest_path = out_path.with_name(out_path.name + ".manifest.json")
    with open(manifest_path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(body, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest_path


def _load_vectors(path: Path) -> embstore.WordVectorTable:
    """Load a text vector file, restoring occurrence counts from the
    ``.counts`` sidecar when one sits next to it."""
    table = embstore.load_text_vectors(path)
    sidecar = path.with_name(path.name + ".counts")
    if sidecar.exists():
        embstore.apply_counts(table, embstore.read_count_sidecar(sidecar))
    return table


def _resolved_table(vectors: Path, synonyms: Path | None) -> vocab.ResolvedVectorTable:
    table = _load_vectors(vectors)
    syns = vocab.load_synonyms(synonyms) if synonyms else None
    return vocab.resolve(table, syns)


def cmd_aggregate(args: argparse.Namespace) -> int:
    inputs = [_resolve_input(p) for p in args.inputs]
    acc = embstore.Accumulator()
    expected_dim: int | None = None

    def shard_accumulator(path: Path) -> embstore.Accumulator:
        local = embstore.Accumulator()
        reader = embstore.open_stream(path)
        for word, vec in embstore.reconstruct_words(reader):
            local.add(word, vec)
        return local

    for path in inputs:
        with open(path, "rb") as fh:
            dim = embstore.read_header(fh).dim
        if expected_dim is None:
            expected_dim = dim
        elif dim != expected_dim:
            raise DimensionMismatchError(
                f"{path}: stream dim {dim} differs from {expected_dim}"
            )

    if args.threads > 1 and len(inputs) > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            shards = list(pool.map(shard_accumulator, inputs))
        for shard in shards:
            acc.update(shard)
    else:
        for path in inputs:
            acc.update(shard_accumulator(path))

    table = acc.finalize(min_count=args.min_count)
    out = Path(args.out)
    embstore.write_text_vectors(table, out)
    sidecar = out.with_name(out.name + ".counts")
    embstore.write_count_sidecar(table, sidecar)
    write_manifest(
        out,
        "aggregate",
        {"min_count": args.min_count, "threads": args.threads},
        inputs,
        [out, sidecar],
    )
    print(f"aggregated {len(table)} words (dim {table.dim}) -> {out}")
    return EXIT_OK


def cmd_discover(args: argparse.Namespace) -> int:
    vectors = _resolve_input(args.vectors)
    synonyms = _resolve_input(args.synonyms) if args.synonyms else None
    seeds_path = _resolve_input(args.seeds)
    table = _resolved_table(vectors, synonyms)

    ranked = disc.load_seed_list(seeds_path)
    if args.seed_count is not None:
        seed_set = disc.sample_seeds(ranked, args.seed_count, label=str(seeds_path))
    else:
        seed_set = disc.SeedSet(ranked, label=str(seeds_path))

    clist = disc.acquire(
        table,
        seed_set,
        per_seed_k=args.per_seed_k,
        final_cut=args.cut,
        threshold=args.overlap_threshold,
        threads=args.threads,
    )
    out = Path(args.out)
    disc.write_candidates(clist, out)
    inputs = [vectors, seeds_path] + ([synonyms] if synonyms else [])
    write_manifest(out, "discover", dict(clist.provenance, threads=args.threads), inputs, [out])
    print(f"kept {len(clist)} candidates for seeds {clist.provenance['seeds']} -> {out}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    candidates_path = _resolve_input(args.candidates)
    truth_path = _resolve_input(args.truth)
    clist = disc.read_candidates(candidates_path)
    truth = evaluation.load_ground_truth(truth_path)
    ks = args.k if args.k else list(evaluation.DEFAULT_KS)
    modes = list(evaluation.MODES) if args.mode == "both" else [args.mode]

    report = evaluation.evaluate(clist, truth, ks=ks, modes=modes)
    out = Path(args.out)
    evaluation.write_report(report, out)
    outputs = [out]
    if args.annotations:
        evaluation.write_annotations(report, Path(args.annotations))
        outputs.append(Path(args.annotations))
    write_manifest(
        out,
        "evaluate",
        {"k": ks, "mode": args.mode},
        [candidates_path, truth_path],
        outputs,
    )
    for e in report.entries:
        print(
            f"{e.mode.upper()} P@{e.k} = {e.precision:.3f}  "
            f"R@{e.k} = {e.recall:.3f}  ({e.relevant}/{e.returned} relevant)"
        )
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace) -> int:
    vectors = _resolve_input(args.vectors)
    synonyms = _resolve_input(args.synonyms) if args.synonyms else None
    seeds_path = _resolve_input(args.ranked_seeds)
    truth_path = _resolve_input(args.truth)

    sizes = _parse_sizes(args.sizes)
    table = _resolved_table(vectors, synonyms)
    ranked = disc.load_seed_list(seeds_path)
    truth = evaluation.load_ground_truth(truth_path)

    points = evaluation.seed_sweep(
        table,
        ranked,
        sizes,
        truth,
        k=args.k,
        mode=args.mode,
        per_seed_k=args.per_seed_k,
        final_cut=args.cut,
        threshold=args.overlap_threshold,
        threads=args.threads,
    )
    out = Path(args.out)
    evaluation.write_sweep(points, out)
    inputs = [vectors, seeds_path, truth_path] + ([synonyms] if synonyms else [])
    write_manifest(
        out,
        "sweep",
        {
            "sizes": sizes,
            "k": args.k,
            "mode": args.mode,
            "per_seed_k": args.per_seed_k,
            "final_cut": args.cut,
            "overlap_threshold": args.overlap_threshold,
        },
        inputs,
        [out],
    )
    for p in points:
        print(f"{p.size} seeds: precision {p.precision:.3f}  recall {p.recall:.3f}")
    return EXIT_OK


def _parse_sizes(raw: str) -> list[int]:
    try:
        sizes = [int(s) for s in raw.split(",") if s.strip()]
    except ValueError:
        raise ValueError(f"sizes must be comma-separated integers, got {raw!r}")
    if not sizes:
        raise ValueError("sizes must be non-empty")
    if any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be strictly increasing, got {sizes}")
    return sizes


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="litmine",
        description="Vector-similarity literature mining pipeline",
    )
    parser.add_argument("--version", action="version", version=f"litmine {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("aggregate", help="fold .cemb streams into a word vector file")
    p.add_argument("inputs", nargs="+", metavar="STREAM", help=".cemb input paths")
    p.add_argument("--out", required=True, help="output text vector file")
    p.add_argument("--min-count", type=int, default=embstore.DEFAULT_MIN_COUNT)
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("discover", help="acquire ranked candidates from seed concepts")
    p.add_argument("--vectors", required=True)
    p.add_argument("--synonyms", default=None)
    p.add_argument("--seeds", required=True, help="seed name file (pre-ranked)")
    p.add_argument("--seed-count", type=int, default=None, help="take the N best-ranked seeds")
    p.add_argument("--per-seed-k", type=int, default=disc.DEFAULT_PER_SEED_K)
    p.add_argument("--cut", type=int, default=disc.DEFAULT_FINAL_CUT)
    p.add_argument(
        "--overlap-threshold", type=float, default=disc.DEFAULT_OVERLAP_THRESHOLD
    )
    p.add_argument("--out", required=True, help="output candidate TSV")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("evaluate", help="score a candidate TSV against ground truth")
    p.add_argument("--candidates", required=True)
    p.add_argument("--truth", required=True)
    p.add_argument("--k", type=int, action="append", help="repeatable; default 100 and 2802")
    p.add_argument("--mode", choices=["exact", "fuzzy", "both"], default="both")
    p.add_argument("--out", required=True, help="output report TSV")
    p.add_argument("--annotations", default=None, help="optional per-candidate match TSV")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="discovery + evaluation across seed-set sizes")
    p.add_argument("--vectors", required=True)
    p.add_argument("--synonyms", default=None)
    p.add_argument("--ranked-seeds", required=True)
    p.add_argument("--sizes", default="2,4,8,16,32,64")
    p.add_argument("--truth", required=True)
    p.add_argument("--k", type=int, default=2802)
    p.add_argument("--mode", choices=["exact", "fuzzy"], default="exact")
    p.add_argument("--per-seed-k", type=int, default=disc.DEFAULT_PER_SEED_K)
    p.add_argument("--cut", type=int, default=disc.DEFAULT_FINAL_CUT)
    p.add_argument(
        "--overlap-threshold", type=float, default=disc.DEFAULT_OVERLAP_THRESHOLD
    )
    p.add_argument("--out", required=True, help="output sweep TSV")
    p.add_argument("--threads", type=int, default=1)
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ParseError, FormatError, CorruptStreamError, StreamOrderError, DimensionMismatchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except (IntegrityError, DegenerateVectorError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTEGRITY
    except NotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NOT_FOUND
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
