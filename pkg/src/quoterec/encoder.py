"""Dual encoder: quote and context towers over a small bidirectional
transformer backbone.

The quote representation is the hidden state at the sequence-start
token. Context encoding supports two layouts:

  MASK_SLOT  [C] left-tokens [M] right-tokens   -> hidden at [M]
  SEP_CLS    [C] left-tokens [S] right-tokens   -> hidden at [C]

MASK_SLOT reads the representation from a mask token standing in for
the quote slot; SEP_CLS reproduces the plain sentence-pair encoding.
Sememe fusion, when enabled, is applied to the quote tower's input
embeddings only.
"""

from __future__ import annotations

import hashlib
import json
import re
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .corpus.types import Quote
from .index import QuoteIndex
from .sememes import SememeEmbeddingTable, SememeLexicon, WordSpan, fuse

PAD, CLS, SEP, MASK, UNK = 0, 1, 2, 3, 4
SPECIAL_TOKENS = ["[PAD]", "[C]", "[S]", "[M]", "[UNK]"]

_TOKEN_RE = re.compile(r"\w+(?:'\w+)*|[^\w\s]", re.UNICODE)


class ContextMode(str, Enum):
    MASK_SLOT = "mask_slot"
    SEP_CLS = "sep_cls"


def word_tokenize(text: str) -> list[str]:
    """Case-folded word/punctuation tokens; one token per word."""
    return _TOKEN_RE.findall(text.casefold())


class Vocab:
    def __init__(self, tokens: Sequence[str]):
        self.id_to_token = SPECIAL_TOKENS + list(tokens)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    def encode(self, token: str) -> int:
        return self.token_to_id.get(token, UNK)

    @classmethod
    def build(cls, texts: Sequence[str]) -> "Vocab":
        seen: set[str] = set()
        for text in texts:
            seen.update(word_tokenize(text))
        return cls(sorted(seen))

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.id_to_token[len(SPECIAL_TOKENS):], ensure_ascii=False),
            encoding="utf-8",
        )

    @classmethod
    def load(cls, path: str | Path) -> "Vocab":
        return cls(json.loads(Path(path).read_text(encoding="utf-8")))


@dataclass
class EncoderConfig:
    dim: int = 128
    layers: int = 4
    heads: int = 4
    ffn_dim: int = 256
    dropout: float = 0.1
    max_quote_tokens: int = 64
    max_context_tokens: int = 160
    share_encoders: bool = False


def _truncate_context(left: list, right: list, budget: int) -> tuple[list, list]:
    """Keep tokens nearest the quote slot: left trims its start, right its end."""
    if len(left) + len(right) <= budget:
        return left, right
    half = budget // 2
    if len(left) <= half:
        return left, right[:budget - len(left)]
    if len(right) <= budget - half:
        return left[len(left) - (budget - len(right)):], right
    return left[len(left) - half:], right[:budget - half]


class TextEncoder(nn.Module):
    """Embedding + learned positions + transformer stack; returns all hiddens."""

    def __init__(self, vocab_size: int, config: EncoderConfig):
        super().__init__()
        self.config = config
        max_len = max(config.max_quote_tokens, config.max_context_tokens) + 4
        self.token_emb = nn.Embedding(vocab_size, config.dim, padding_idx=PAD)
        self.pos_emb = nn.Embedding(max_len, config.dim)
        layer = nn.TransformerEncoderLayer(
            d_model=config.dim, nhead=config.heads, dim_feedforward=config.ffn_dim,
            dropout=config.dropout, batch_first=True, norm_first=True,
        )
        self.stack = nn.TransformerEncoder(layer, num_layers=config.layers,
                                           enable_nested_tensor=False)
        self.norm = nn.LayerNorm(config.dim)

    def forward(
        self,
        ids: torch.Tensor,                       # (B, L)
        pad_mask: torch.Tensor,                  # (B, L) True where padding
        input_embeddings: torch.Tensor | None = None,
    ) -> torch.Tensor:
        if input_embeddings is None:
            input_embeddings = self.token_emb(ids)
        positions = torch.arange(ids.shape[1], device=ids.device)
        h = input_embeddings + self.pos_emb(positions)[None, :, :]
        h = self.stack(h, src_key_padding_mask=pad_mask)
        return self.norm(h)


class DualEncoder(nn.Module):
    """Quote and context towers sharing a tokenizer and vocabulary."""

    def __init__(
        self,
        vocab: Vocab,
        config: EncoderConfig | None = None,
        context_mode: ContextMode = ContextMode.MASK_SLOT,
        lexicon: SememeLexicon | None = None,
        fusion_alpha: float = 0.0,
    ):
        super().__init__()
        self.vocab = vocab
        self.config = config or EncoderConfig()
        self.context_mode = ContextMode(context_mode)
        self.lexicon = lexicon
        self.fusion_alpha = float(fusion_alpha)
        if self.fusion_alpha < 0:
            raise ValueError("fusion_alpha must be >= 0")
        if self.fusion_alpha > 0 and lexicon is None:
            raise ValueError("sememe fusion requires a lexicon")

        self.quote_encoder = TextEncoder(len(vocab), self.config)
        if self.config.share_encoders:
            self.context_encoder = self.quote_encoder
        else:
            self.context_encoder = TextEncoder(len(vocab), self.config)
        if lexicon is not None and lexicon.num_sememes > 0:
            self.sememe_table: SememeEmbeddingTable | None = SememeEmbeddingTable(
                lexicon.num_sememes, self.config.dim)
        else:
            self.sememe_table = None

    # -- tokenization -------------------------------------------------------

    def _quote_layout(self, text: str) -> tuple[list[int], list[WordSpan]]:
        tokens = word_tokenize(text)
        if not tokens:
            raise ValueError("cannot encode empty quote text")
        tokens = tokens[: self.config.max_quote_tokens - 1]
        ids = [CLS] + [self.vocab.encode(t) for t in tokens]
        spans = [(t, i + 1, i + 2) for i, t in enumerate(tokens) if t[0].isalnum()]
        return ids, spans

    def _context_layout(self, left: str, right: str) -> tuple[list[int], int]:
        """Token ids plus the index of the representation position."""
        l_tokens = word_tokenize(left)
        r_tokens = word_tokenize(right)
        l_tokens, r_tokens = _truncate_context(
            l_tokens, r_tokens, self.config.max_context_tokens - 2)
        if not l_tokens and not r_tokens:
            raise ValueError("context needs a non-empty left or right side")
        slot = MASK if self.context_mode is ContextMode.MASK_SLOT else SEP
        ids = ([CLS] + [self.vocab.encode(t) for t in l_tokens] + [slot]
               + [self.vocab.encode(t) for t in r_tokens])
        rep_pos = 1 + len(l_tokens) if self.context_mode is ContextMode.MASK_SLOT else 0
        return ids, rep_pos

    @staticmethod
    def _pad_batch(seqs: list[list[int]]) -> tuple[torch.Tensor, torch.Tensor]:
        max_len = max(len(s) for s in seqs)
        ids = torch.full((len(seqs), max_len), PAD, dtype=torch.long)
        for i, s in enumerate(seqs):
            ids[i, :len(s)] = torch.tensor(s, dtype=torch.long)
        return ids, ids == PAD

    # -- differentiable batch encodes (used by the trainer) -----------------

    def forward_quotes(self, texts: Sequence[str]) -> torch.Tensor:
        layouts = [self._quote_layout(t) for t in texts]
        ids, pad_mask = self._pad_batch([ids for ids, _ in layouts])
        emb = self.quote_encoder.token_emb(ids)
        if self.sememe_table is not None and self.fusion_alpha > 0:
            fused = [
                fuse(emb[i], spans, self.lexicon, self.sememe_table, self.fusion_alpha)
                for i, (_, spans) in enumerate(layouts)
            ]
            emb = torch.stack(fused)
        hidden = self.quote_encoder(ids, pad_mask, input_embeddings=emb)
        return hidden[:, 0, :]

    def forward_contexts(self, sides: Sequence[tuple[str, str]]) -> torch.Tensor:
        layouts = [self._context_layout(l, r) for l, r in sides]
        ids, pad_mask = self._pad_batch([ids for ids, _ in layouts])
        hidden = self.context_encoder(ids, pad_mask)
        rows = torch.arange(len(layouts))
        rep = torch.tensor([pos for _, pos in layouts], dtype=torch.long)
        return hidden[rows, rep, :]

    # -- inference-mode API -------------------------------------------------

    @torch.no_grad()
    def encode_quote(self, text: str) -> np.ndarray:
        self.eval()
        return self.forward_quotes([text])[0].double().numpy()

    @torch.no_grad()
    def encode_context(self, left: str, right: str = "") -> np.ndarray:
        self.eval()
        return self.forward_contexts([(left, right)])[0].double().numpy()

    # alias matching the evaluation harness signature
    encode_context_vec = encode_context

    @torch.no_grad()
    def build_quote_index(self, catalog: Sequence[Quote], batch_size: int = 64) -> QuoteIndex:
        self.eval()
        ordered = sorted(catalog, key=lambda q: q.id)
        rows = []
        for i in range(0, len(ordered), batch_size):
            chunk = [q.text for q in ordered[i:i + batch_size]]
            rows.append(self.forward_quotes(chunk).double().numpy())
        return QuoteIndex(
            matrix=np.concatenate(rows, axis=0),
            quote_ids=np.array([q.id for q in ordered]),
            fingerprint=self.fingerprint(),
        )

    # -- identity and persistence ------------------------------------------

    def fingerprint(self) -> str:
        """Hash of everything that determines quote vectors."""
        h = hashlib.sha256()
        h.update(f"alpha={self.fusion_alpha};mode={self.context_mode.value}".encode())
        state = self.quote_encoder.state_dict()
        for key in sorted(state):
            h.update(key.encode())
            h.update(state[key].detach().cpu().numpy().tobytes())
        if self.sememe_table is not None:
            h.update(self.sememe_table.weight.detach().cpu().numpy().tobytes())
        return h.hexdigest()[:16]

    def save(self, out_dir: str | Path) -> None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        self.vocab.save(out / "vocab.json")
        if self.lexicon is not None:
            self.lexicon.save(out / "lexicon.jsonl")
        torch.save(self.state_dict(), out / "weights.pt")
        manifest = {
            "context_mode": self.context_mode.value,
            "fusion_alpha": self.fusion_alpha,
            "fingerprint": self.fingerprint(),
            "vocab_size": len(self.vocab),
            **asdict(self.config),
        }
        with open(out / "manifest.txt", "w", encoding="utf-8") as f:
            for key in sorted(manifest):
                f.write(f"{key}={manifest[key]}\n")

    @classmethod
    def load(cls, ckpt_dir: str | Path) -> "DualEncoder":
        ckpt = Path(ckpt_dir)
        manifest: dict[str, str] = {}
        for line in (ckpt / "manifest.txt").read_text(encoding="utf-8").splitlines():
            if line.strip():
                key, _, value = line.partition("=")
                manifest[key] = value
        config = EncoderConfig(
            dim=int(manifest["dim"]), layers=int(manifest["layers"]),
            heads=int(manifest["heads"]), ffn_dim=int(manifest["ffn_dim"]),
            dropout=float(manifest["dropout"]),
            max_quote_tokens=int(manifest["max_quote_tokens"]),
            max_context_tokens=int(manifest["max_context_tokens"]),
            share_encoders=manifest["share_encoders"] == "True",
        )
        vocab = Vocab.load(ckpt / "vocab.json")
        lexicon = None
        if (ckpt / "lexicon.jsonl").exists():
            lexicon = SememeLexicon.load(ckpt / "lexicon.jsonl")
        model = cls(
            vocab, config,
            context_mode=ContextMode(manifest["context_mode"]),
            lexicon=lexicon,
            fusion_alpha=float(manifest["fusion_alpha"]),
        )
        model.load_state_dict(torch.load(ckpt / "weights.pt", weights_only=True))
        model.eval()
        saved_fp = manifest["fingerprint"]
        if model.fingerprint() != saved_fp:
            raise ValueError(f"checkpoint fingerprint mismatch in {ckpt_dir}")
        return model
