"""Word -> sememe-set knowledge base and embedding fusion.

Fusion adds the alpha-weighted average of a word's sememe embeddings to
every token embedding of that word inside the quote encoder. Words
absent from the lexicon (and special/punctuation tokens) pass through
untouched.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Iterable, Sequence

import torch
from torch import nn


class SememeLexicon:
    """Immutable word -> sememe-id-set mapping with a dense inventory."""

    def __init__(self, word_to_sememes: dict[str, set[str]]):
        inventory = sorted({s for ss in word_to_sememes.values() for s in ss})
        self.inventory: list[str] = inventory
        self._name_to_id = {name: i for i, name in enumerate(inventory)}
        self._word_to_ids: dict[str, tuple[int, ...]] = {
            word.casefold(): tuple(sorted(self._name_to_id[s] for s in ss))
            for word, ss in word_to_sememes.items()
        }

    @property
    def num_sememes(self) -> int:
        return len(self.inventory)

    def sememe_ids(self, word: str) -> tuple[int, ...]:
        """Dense sememe ids for a surface word; () when unannotated."""
        return self._word_to_ids.get(word.casefold(), ())

    def sememes(self, word: str) -> set[str]:
        return {self.inventory[i] for i in self.sememe_ids(word)}

    @classmethod
    def load(cls, path: str | Path) -> "SememeLexicon":
        """Load JSONL {"word": str, "sememes": [str]}; duplicate words merge."""
        acc: dict[str, set[str]] = {}
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, 1):
                line = line.strip()
                if not line:
                    continue
                try:
                    obj = json.loads(line)
                    word = str(obj["word"])
                    sememes = {str(s) for s in obj["sememes"]}
                except (json.JSONDecodeError, KeyError, TypeError) as e:
                    raise ValueError(f"{path}: malformed lexicon line {lineno}: {e}") from e
                acc.setdefault(word.casefold(), set()).update(sememes)
        return cls(acc)

    @classmethod
    def from_dict(cls, mapping: dict[str, Iterable[str]]) -> "SememeLexicon":
        return cls({w: set(ss) for w, ss in mapping.items()})

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for word in sorted(self._word_to_ids):
                f.write(json.dumps(
                    {"word": word, "sememes": sorted(self.sememes(word))},
                    ensure_ascii=False,
                ) + "\n")


class SememeEmbeddingTable(nn.Module):
    """Trainable (num_sememes, d) embedding matrix, randomly initialized."""

    def __init__(self, num_sememes: int, dim: int, trainable: bool = True):
        super().__init__()
        self.weight = nn.Parameter(torch.randn(num_sememes, dim) * 0.02,
                                   requires_grad=trainable)

    @property
    def num_sememes(self) -> int:
        return self.weight.shape[0]

    @property
    def dim(self) -> int:
        return self.weight.shape[1]


WordSpan = tuple[str, int, int]  # (surface word, first token pos, past-last pos)


def fuse(
    token_embeddings: torch.Tensor,
    word_spans: Sequence[WordSpan],
    lexicon: SememeLexicon,
    table: SememeEmbeddingTable,
    alpha: float,
) -> torch.Tensor:
    """Add the average sememe embedding of each annotated word to its tokens.

    ``token_embeddings`` is (seq_len, d). Positions outside the given
    spans, and words with empty sememe sets, are returned bit-identical.
    """
    if alpha < 0:
        raise ValueError(f"alpha must be >= 0, got {alpha}")
    if token_embeddings.shape[-1] != table.dim:
        raise ValueError("embedding width does not match sememe table width")
    if alpha == 0:
        return token_embeddings
    seq_len = token_embeddings.shape[0]
    positions: list[int] = []
    additions: list[torch.Tensor] = []
    for word, start, end in word_spans:
        if not (0 <= start <= end <= seq_len):
            raise ValueError(f"word span ({start}, {end}) out of range for length {seq_len}")
        ids = lexicon.sememe_ids(word)
        if not ids:
            continue
        avg = table.weight[list(ids)].mean(dim=0) * alpha
        for pos in range(start, end):
            positions.append(pos)
            additions.append(avg)
    if not positions:
        return token_embeddings
    out = token_embeddings.clone()
    out[positions] = out[positions] + torch.stack(additions)
    return out
