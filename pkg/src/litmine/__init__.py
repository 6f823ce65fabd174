"""Vector-similarity literature mining.

Turns per-occurrence contextual token embeddings into static word vectors,
resolves gene synonyms, acquires ranked candidate concepts from seed sets by
cosine similarity with near-duplicate name filtering, and evaluates
candidate lists against ground-truth target sets.
"""

__version__ = "0.1.0"

from .discover import (
    CandidateList,
    FusedCandidate,
    SeedSet,
    acquire,
    fuse,
    levenshtein,
    name_filter,
    name_overlap,
    sample_seeds,
)
from .embstore import (
    Accumulator,
    EmbeddingRecord,
    StreamHeader,
    StreamReader,
    StreamWriter,
    WordEntry,
    WordVectorTable,
    aggregate,
    load_text_vectors,
    merge_accumulators,
    open_stream,
    read_header,
    reconstruct_words,
    write_stream,
    write_text_vectors,
)
from .evaluation import (
    EvalReport,
    GroundTruth,
    MatchAnnotation,
    evaluate,
    gene_prefix,
    load_ground_truth,
    match,
    precision_recall_at_k,
    seed_sweep,
)
from .sim import Neighbor, SimilarityIndex, cosine, top_k
from .vocab import ResolvedVectorTable, SynonymTable, load_synonyms, resolve

__all__ = [
    "__version__",
    "Accumulator",
    "CandidateList",
    "EmbeddingRecord",
    "EvalReport",
    "FusedCandidate",
    "GroundTruth",
    "MatchAnnotation",
    "Neighbor",
    "ResolvedVectorTable",
    "SeedSet",
    "SimilarityIndex",
    "StreamHeader",
    "StreamReader",
    "StreamWriter",
    "SynonymTable",
    "WordEntry",
    "WordVectorTable",
    "acquire",
    "aggregate",
    "cosine",
    "evaluate",
    "fuse",
    "gene_prefix",
    "levenshtein",
    "load_ground_truth",
    "load_synonyms",
    "load_text_vectors",
    "match",
    "merge_accumulators",
    "name_filter",
    "name_overlap",
    "open_stream",
    "precision_recall_at_k",
    "read_header",
    "reconstruct_words",
    "resolve",
    "sample_seeds",
    "seed_sweep",
    "top_k",
    "write_stream",
    "write_text_vectors",
]
