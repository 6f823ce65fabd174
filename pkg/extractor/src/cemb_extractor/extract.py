"""Run a transformer over a corpus directory and dump subword embeddings.

Each document is lowercased (configurable), whitespace-split into words, and
tokenized into subword pieces. Pieces are packed into sequences of at most
``max_seq_len`` tokens (sequence delimiters included) without splitting a
word across sequences. For every non-delimiter piece one record is written:
the position key (doc_id, seq_id, word_idx) ties the piece back to its
source word, and the vector is the sum of the last ``layers`` encoder hidden
states at that position.

doc_id is the document's index in the sorted directory listing; a skipped
document keeps its index, so ids stay stable under partial failures.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator

import torch

from .config import ExtractionConfig
from .stream_writer import CembWriter

logger = logging.getLogger(__name__)


class ModelMismatchError(Exception):
    """The checkpoint cannot satisfy the configuration."""


@dataclass(slots=True)
class ExtractionResult:
    records: int
    sequences: int
    documents: int
    skipped: int
    dim: int


@dataclass(slots=True)
class _Chunk:
    """One model sequence: a contiguous word range of one document."""

    doc_id: int
    seq_id: int
    word_offset: int
    words: list[str]


def corpus_files(corpus_dir: str | Path) -> list[Path]:
    """Regular files of the corpus directory, sorted by name."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise NotADirectoryError(f"corpus directory {root} does not exist")
    return sorted(p for p in root.iterdir() if p.is_file())


def _chunk_document(tokenizer, words: list[str], capacity: int) -> Iterator[tuple[int, list[str]]]:
    """Split a word list into (word_offset, words) chunks whose piece counts
    fit ``capacity``. A single word with more pieces than the capacity gets a
    chunk of its own and is truncated at encode time."""
    encoding = tokenizer(words, is_split_into_words=True, add_special_tokens=False)
    pieces = [0] * len(words)
    for wid in encoding.word_ids(0):
        if wid is not None:
            pieces[wid] += 1

    start = 0
    used = 0
    for i, n in enumerate(pieces):
        if i > start and used + n > capacity:
            yield start, words[start:i]
            start, used = i, 0
        used += n
    if start < len(words):
        yield start, words[start:]


def extract(corpus_dir: str | Path, config: ExtractionConfig) -> ExtractionResult:
    """Embed every document under ``corpus_dir`` into one .cemb stream."""
    from transformers import AutoModel, AutoTokenizer

    tokenizer = AutoTokenizer.from_pretrained(config.checkpoint, use_fast=True)
    model = AutoModel.from_pretrained(config.checkpoint)
    model.eval()

    depth = model.config.num_hidden_layers
    if config.layers > depth:
        raise ModelMismatchError(
            f"config wants the last {config.layers} layers but the checkpoint has {depth}"
        )
    dim = model.config.hidden_size
    if config.expected_dim is not None and dim != config.expected_dim:
        raise ModelMismatchError(
            f"checkpoint hidden size {dim} differs from expected {config.expected_dim}"
        )
    capacity = config.max_seq_len - tokenizer.num_special_tokens_to_add()
    if capacity < 1:
        raise ModelMismatchError(
            f"max_seq_len {config.max_seq_len} leaves no room after delimiter tokens"
        )

    chunks: list[_Chunk] = []
    documents = 0
    skipped = 0
    for doc_id, path in enumerate(corpus_files(corpus_dir)):
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as exc:
            logger.warning("skipping %s: %s", path, exc)
            skipped += 1
            continue
        documents += 1
        if config.lowercase:
            text = text.lower()
        words = text.split()
        if not words:
            continue
        for seq_id, (offset, chunk_words) in enumerate(
            _chunk_document(tokenizer, words, capacity)
        ):
            chunks.append(_Chunk(doc_id, seq_id, offset, chunk_words))

    records = 0
    with CembWriter(config.out_path, dim) as writer:
        for base in range(0, len(chunks), config.batch_size):
            batch = chunks[base : base + config.batch_size]
            encoding = tokenizer(
                [c.words for c in batch],
                is_split_into_words=True,
                padding=True,
                truncation=True,
                max_length=config.max_seq_len,
                return_tensors="pt",
            )
            with torch.no_grad():
                output = model(**encoding, output_hidden_states=True)
            summed = torch.stack(output.hidden_states[-config.layers :]).sum(dim=0)
            vectors = summed.numpy()
            for b, chunk in enumerate(batch):
                for pos, wid in enumerate(encoding.word_ids(b)):
                    if wid is None:
                        continue  # delimiter or padding
                    writer.write(
                        chunk.doc_id,
                        chunk.seq_id,
                        chunk.word_offset + wid,
                        chunk.words[wid],
                        vectors[b, pos],
                    )
                    records += 1

    return ExtractionResult(
        records=records,
        sequences=len(chunks),
        documents=documents,
        skipped=skipped,
        dim=dim,
    )
