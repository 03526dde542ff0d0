"""Reference-free discourse coherence evaluation toolkit.

Builds labeled coherent/incoherent datasets by shuffling sentences and by
substituting interior sentences under one-sided context, scores discourses
with a pluggable backend fused at global and local granularity, and
meta-evaluates any scorer against human ratings.
"""

__version__ = "0.1.0"

from .augment import (
    AugmentationConfig,
    BuildReport,
    BuildResult,
    CandidatePair,
    EchoGenerator,
    GenerationExchange,
    GeneratorBackend,
    MaskedContext,
    build_dataset,
    coherence_filter,
    generate_substitute,
    global_shuffle,
    rule_based_substitute,
    select_mask_index,
    truncate_context,
)
from .backends import (
    CallableBackend,
    ConstantBackend,
    HeuristicBackend,
    OracleBackend,
    ScorerBackend,
    checked_score,
)
from .corpus import (
    load_documents,
    read_dataset,
    sample_leading,
    segment_sentences,
    split_dataset,
    write_dataset,
)
from .discourse import Discourse, Document, LabeledSample, as_discourse, as_discourses
from .errors import (
    BackendError,
    CoherevalError,
    ConfigError,
    EmptyGeneration,
    InsufficientData,
    IntegrityError,
    InvalidInput,
    NoInterior,
    ParseError,
    TooShort,
    Undefined,
)
from .metaeval import (
    BucketReport,
    CorrelationReport,
    RatingMatrix,
    dataset_level,
    kendall,
    length_bucket_report,
    load_pair_file,
    load_summeval,
    pearson,
    ranking_accuracy,
    render_bucket_table,
    render_correlation_table,
    sample_level,
    spearman,
)
from .scoring import (
    CoherenceScorer,
    ScoreBreakdown,
    ScoringConfig,
    global_score,
    local_scores,
    pairwise_rank,
    unified_score,
)

__all__ = [
    "__version__",
    "AugmentationConfig",
    "BackendError",
    "BucketReport",
    "BuildReport",
    "BuildResult",
    "CallableBackend",
    "CandidatePair",
    "CoherenceScorer",
    "CoherevalError",
    "ConfigError",
    "ConstantBackend",
    "CorrelationReport",
    "Discourse",
    "Document",
    "EchoGenerator",
    "EmptyGeneration",
    "GenerationExchange",
    "GeneratorBackend",
    "HeuristicBackend",
    "InsufficientData",
    "IntegrityError",
    "InvalidInput",
    "LabeledSample",
    "MaskedContext",
    "NoInterior",
    "OracleBackend",
    "ParseError",
    "RatingMatrix",
    "ScoreBreakdown",
    "ScorerBackend",
    "ScoringConfig",
    "TooShort",
    "Undefined",
    "as_discourse",
    "as_discourses",
    "build_dataset",
    "checked_score",
    "coherence_filter",
    "dataset_level",
    "generate_substitute",
    "global_score",
    "global_shuffle",
    "kendall",
    "length_bucket_report",
    "load_documents",
    "load_pair_file",
    "load_summeval",
    "local_scores",
    "pairwise_rank",
    "pearson",
    "ranking_accuracy",
    "read_dataset",
    "render_bucket_table",
    "render_correlation_table",
    "rule_based_substitute",
    "sample_leading",
    "sample_level",
    "segment_sentences",
    "select_mask_index",
    "spearman",
    "split_dataset",
    "truncate_context",
    "unified_score",
    "write_dataset",
]
