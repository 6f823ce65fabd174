"""Command-line front end: one invocation embeds one corpus directory."""

from __future__ import annotations

import argparse
import logging
import sys
from typing import Sequence

from .config import ExtractionConfig
from .extract import ModelMismatchError, extract


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cemb-extract",
        description="Dump per-subword transformer embeddings to a .cemb stream",
    )
    parser.add_argument("--corpus", required=True, help="directory of plain-text documents")
    parser.add_argument("--checkpoint", required=True, help="model name or local path")
    parser.add_argument("--out", required=True, help="output .cemb path")
    parser.add_argument("--max-seq-len", type=int, default=256)
    parser.add_argument("--layers", type=int, default=4, help="sum the last N encoder layers")
    parser.add_argument(
        "--keep-case",
        action="store_true",
        help="do not lowercase documents before tokenizing",
    )
    parser.add_argument("--batch-size", type=int, default=8)
    parser.add_argument(
        "--expected-dim",
        type=int,
        default=None,
        help="fail if the checkpoint hidden size differs",
    )
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    args = build_parser().parse_args(argv)
    try:
        config = ExtractionConfig(
            checkpoint=args.checkpoint,
            out_path=args.out,
            max_seq_len=args.max_seq_len,
            layers=args.layers,
            lowercase=not args.keep_case,
            batch_size=args.batch_size,
            expected_dim=args.expected_dim,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    try:
        result = extract(args.corpus, config)
    except (ModelMismatchError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(
        f"wrote {result.records} records in {result.sequences} sequences "
        f"from {result.documents} documents (dim {result.dim}, "
        f"{result.skipped} skipped) -> {args.out}"
    )
    return 0


if __name__ == "__main__":
    sys.exit(main())
