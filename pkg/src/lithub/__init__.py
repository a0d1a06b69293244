"""lithub: a curated literature hub engine.

Ingests citation records, triages them for topical relevance, annotates
topics and domain entities, runs a human-in-the-loop review queue for an
emerging topic, and serves the collection through faceted search, stats,
and an HTTP API.
"""

from .store import CitationRecord, CorpusStore, IngestReport, parse_record, serialize_record
from .text import Token, Vocabulary, build_vocabulary, featurize, tokenize
from .triage import LinearModel, TriageDecision, keyword_prefilter, train_triage, triage
from .topics import (
    DEFAULT_TOPICS,
    MultiLabelModel,
    TopicAnnotation,
    annotate_topics,
    topic_distribution,
    train_topics,
)
from .entities import (
    EntityMention,
    Lexicon,
    annotate_record,
    link_funder,
    normalize,
    recognize,
)
from .loop import (
    LongCovidLoop,
    LoopResources,
    Membership,
    ReviewItem,
    SignalVector,
    aggregate,
)
from .evaluate import PRF, compare_collections, iaa_exact, prf, split
from .search import DocAnnotations, FacetQuery, SearchIndex, SearchResult, parse_query
from .stats import cooccurrence, growth, share_ratio, trending
from .pipeline import HubConfig, PipelineRun, Snapshot, run_daily

__version__ = "0.1.0"

__all__ = [
    "CitationRecord",
    "CorpusStore",
    "IngestReport",
    "parse_record",
    "serialize_record",
    "Token",
    "Vocabulary",
    "build_vocabulary",
    "featurize",
    "tokenize",
    "LinearModel",
    "TriageDecision",
    "keyword_prefilter",
    "train_triage",
    "triage",
    "DEFAULT_TOPICS",
    "MultiLabelModel",
    "TopicAnnotation",
    "annotate_topics",
    "topic_distribution",
    "train_topics",
    "EntityMention",
    "Lexicon",
    "annotate_record",
    "link_funder",
    "normalize",
    "recognize",
    "LongCovidLoop",
    "LoopResources",
    "Membership",
    "ReviewItem",
    "SignalVector",
    "aggregate",
    "PRF",
    "compare_collections",
    "iaa_exact",
    "prf",
    "split",
    "DocAnnotations",
    "FacetQuery",
    "SearchIndex",
    "SearchResult",
    "parse_query",
    "cooccurrence",
    "growth",
    "share_ratio",
    "trending",
    "HubConfig",
    "PipelineRun",
    "Snapshot",
    "run_daily",
]
