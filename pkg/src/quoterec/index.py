"""Quote representation matrix used for scoring."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np


class StaleIndexError(RuntimeError):
    """The index was built by different encoder weights than expected."""


@dataclass
class QuoteIndex:
    """Matrix of quote vectors; row i corresponds to ``quote_ids[i]``.

    ``fingerprint`` identifies the quote-encoder weights that produced
    the matrix; scoring against an index built by other weights raises
    :class:`StaleIndexError`.
    """

    matrix: np.ndarray              # (num_quotes, d)
    quote_ids: np.ndarray           # (num_quotes,) int64, ascending
    fingerprint: str

    def __post_init__(self) -> None:
        self.matrix = np.asarray(self.matrix, dtype=np.float64)
        self.quote_ids = np.asarray(self.quote_ids, dtype=np.int64)
        if self.matrix.ndim != 2 or len(self.quote_ids) != self.matrix.shape[0]:
            raise ValueError("matrix rows must match quote_ids length")
        if not np.isfinite(self.matrix).all():
            raise ValueError("index matrix contains non-finite entries")

    def __len__(self) -> int:
        return self.matrix.shape[0]

    def verify(self, expected_fingerprint: str) -> None:
        if self.fingerprint != expected_fingerprint:
            raise StaleIndexError(
                f"index fingerprint {self.fingerprint} != encoder {expected_fingerprint}; "
                "rebuild the index"
            )

    def row_of(self, quote_id: int) -> int:
        pos = int(np.searchsorted(self.quote_ids, quote_id))
        if pos >= len(self.quote_ids) or self.quote_ids[pos] != quote_id:
            raise KeyError(f"quote id {quote_id} not in index")
        return pos

    def save(self, path: str | Path) -> None:
        np.savez(path, matrix=self.matrix, quote_ids=self.quote_ids,
                 fingerprint=np.array(self.fingerprint))

    @classmethod
    def load(cls, path: str | Path) -> "QuoteIndex":
        data = np.load(path, allow_pickle=False)
        return cls(matrix=data["matrix"], quote_ids=data["quote_ids"],
                   fingerprint=str(data["fingerprint"]))
