"""Core data types for the dataset-building pipeline."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Quote:
    """A candidate quotation with its constituent sentences."""

    id: int
    text: str
    sentences: tuple[str, ...]

    def __post_init__(self) -> None:
        if self.id < 0:
            raise ValueError(f"quote id must be >= 0, got {self.id}")
        if not self.sentences:
            raise ValueError(f"quote {self.id} has no sentences")


@dataclass(frozen=True)
class QuoteOccurrence:
    """One mined occurrence of (part of) a quote inside a document.

    ``span`` is a half-open [start, end) range of unit offsets within the
    document (words or characters, depending on the language config).
    ``sentence_range`` is the half-open range of constituent-sentence
    indices that matched consecutively.
    """

    quote_id: int
    document_id: str
    span: tuple[int, int]
    sentence_range: tuple[int, int]

    @property
    def num_sentences(self) -> int:
        return self.sentence_range[1] - self.sentence_range[0]


@dataclass
class ContextQuotePair:
    """A context window around one quote occurrence."""

    left: str
    right: str
    quote_id: int
    source_document_id: str
    split: str = "unassigned"

    def key(self) -> tuple[str, str, int]:
        return (self.left, self.right, self.quote_id)


@dataclass
class BuildConfig:
    """Knobs for mining, filtering and splitting a dataset.

    ``unit`` selects the context/matching granularity: "word" for
    space-segmented languages, "char" otherwise.
    """

    window_size: int = 40
    unit: str = "word"
    min_occurrences: int = 5
    max_pairs_per_quote: int = 200
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    zero_shot_quote_count: int = 100
    rng_seed: int = 0
    doc_per_block: bool = False

    def __post_init__(self) -> None:
        if self.unit not in ("word", "char"):
            raise ValueError(f"unit must be 'word' or 'char', got {self.unit!r}")
        if self.window_size < 1:
            raise ValueError("window_size must be >= 1")
        if self.min_occurrences < 1:
            raise ValueError("min_occurrences must be >= 1")
        if self.max_pairs_per_quote < self.min_occurrences:
            raise ValueError("max_pairs_per_quote must be >= min_occurrences")
        total = sum(self.split_ratios)
        if any(r < 0 for r in self.split_ratios) or abs(total - 1.0) > 1e-9:
            raise ValueError(f"split_ratios must be non-negative and sum to 1, got {self.split_ratios}")
        if self.zero_shot_quote_count < 0:
            raise ValueError("zero_shot_quote_count must be >= 0")
