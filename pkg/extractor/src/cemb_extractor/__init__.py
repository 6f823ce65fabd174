"""Transformer embedding extraction to .cemb streams."""

from .config import ExtractionConfig
from .extract import ExtractionResult, ModelMismatchError, corpus_files, extract
from .stream_writer import FORMAT_VERSION, MAGIC, CembWriter

__version__ = "0.1.0"

__all__ = [
    "CembWriter",
    "ExtractionConfig",
    "ExtractionResult",
    "FORMAT_VERSION",
    "MAGIC",
    "ModelMismatchError",
    "corpus_files",
    "extract",
]
