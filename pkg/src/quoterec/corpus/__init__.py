from .types import BuildConfig, ContextQuotePair, Quote, QuoteOccurrence
from .sentences import split_into_sentences
from .builder import (
    build_dataset,
    dedup_filter_cap,
    extract_context,
    load_quote_set,
    scan_corpus,
    split_dataset,
)

__all__ = [
    "BuildConfig",
    "ContextQuotePair",
    "Quote",
    "QuoteOccurrence",
    "split_into_sentences",
    "load_quote_set",
    "scan_corpus",
    "extract_context",
    "dedup_filter_cap",
    "split_dataset",
    "build_dataset",
]
