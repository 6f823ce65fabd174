"""Extraction run parameters."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path


@dataclass(frozen=True)
class ExtractionConfig:
    """Everything a run needs besides the corpus directory.

    ``layers`` counts encoder layers from the top: the emitted vector for a
    subword is the element-wise sum of the last ``layers`` hidden states at
    its position. ``max_seq_len`` caps a sequence's total subword count,
    sequence delimiter tokens included. ``expected_dim``, when set, makes a
    checkpoint with a different hidden size a fatal error instead of a
    silently different stream.
    """

    checkpoint: str
    out_path: str | Path
    max_seq_len: int = 256
    layers: int = 4
    lowercase: bool = True
    batch_size: int = 8
    expected_dim: int | None = None

    def __post_init__(self) -> None:
        if self.max_seq_len < 2:
            raise ValueError(f"max_seq_len must be at least 2, got {self.max_seq_len}")
        if self.layers < 1:
            raise ValueError(f"layers must be positive, got {self.layers}")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")
        if self.expected_dim is not None and self.expected_dim < 1:
            raise ValueError(f"expected_dim must be positive, got {self.expected_dim}")
