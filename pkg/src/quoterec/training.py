"""Two-stage training with sampled-negative and full-softmax losses.

Stage 1 trains both encoders with a pseudo-rank loss over freshly
sampled negatives; stage 2 freezes the quote encoder, computes the
quote index once and trains the context encoder against the full
softmax over the catalog. The best checkpoint is picked by validation
MRR after every epoch of either stage.
"""

from __future__ import annotations

import copy
import logging
import math
import random
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Sequence

import numpy as np
import torch
from torch import nn

from .corpus.builder import write_quotes
from .corpus.types import ContextQuotePair, Quote
from .encoder import ContextMode, DualEncoder, EncoderConfig, Vocab
from .evaluation import EvalReport, evaluate
from .index import QuoteIndex
from .sememes import SememeLexicon

logger = logging.getLogger(__name__)

ABLATIONS = ("full", "no_sememe", "no_retrain", "no_simtrain", "sim_baseline")


@dataclass
class TrainConfig:
    negatives: int = 19
    alpha: float = 0.5
    context_mode: ContextMode = ContextMode.MASK_SLOT
    sememe_fusion: bool = True
    train_quote_encoder: bool = True
    stage1_epochs: int = 3
    stage2_epochs: int = 3
    batch_size: int = 32
    initial_lr: float = 1e-3
    weight_decay: float = 0.01
    patience: int = 2
    seed: int = 0
    ablation_name: str = "full"
    encoder: EncoderConfig = field(default_factory=EncoderConfig)

    def __post_init__(self) -> None:
        if self.negatives < 1:
            raise ValueError("negatives must be >= 1")
        if self.stage1_epochs < 0 or self.stage2_epochs < 0:
            raise ValueError("epochs must be >= 0")
        self.context_mode = ContextMode(self.context_mode)

    def with_negatives(self, n: int) -> "TrainConfig":
        return replace(self, negatives=n)

    # flat key=value config file ------------------------------------------

    def to_file(self, path: str | Path) -> None:
        flat = {
            "negatives": self.negatives, "alpha": self.alpha,
            "context_mode": self.context_mode.value,
            "sememe_fusion": self.sememe_fusion,
            "train_quote_encoder": self.train_quote_encoder,
            "stage1_epochs": self.stage1_epochs, "stage2_epochs": self.stage2_epochs,
            "batch_size": self.batch_size, "initial_lr": self.initial_lr,
            "weight_decay": self.weight_decay, "patience": self.patience,
            "seed": self.seed, "ablation_name": self.ablation_name,
            "dim": self.encoder.dim, "layers": self.encoder.layers,
            "heads": self.encoder.heads, "ffn_dim": self.encoder.ffn_dim,
            "dropout": self.encoder.dropout,
            "max_quote_tokens": self.encoder.max_quote_tokens,
            "max_context_tokens": self.encoder.max_context_tokens,
        }
        with open(path, "w", encoding="utf-8") as f:
            for key in sorted(flat):
                f.write(f"{key}={flat[key]}\n")

    @classmethod
    def from_file(cls, path: str | Path) -> "TrainConfig":
        kv: dict[str, str] = {}
        for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}: line {lineno} is not key=value")
            key, _, value = line.partition("=")
            kv[key.strip()] = value.strip()

        def geti(k, d): return int(kv.get(k, d))
        def getf(k, d): return float(kv.get(k, d))
        def getb(k, d): return kv.get(k, str(d)).lower() in ("true", "1", "yes")

        enc = EncoderConfig(
            dim=geti("dim", 128), layers=geti("layers", 4), heads=geti("heads", 4),
            ffn_dim=geti("ffn_dim", 256), dropout=getf("dropout", 0.1),
            max_quote_tokens=geti("max_quote_tokens", 64),
            max_context_tokens=geti("max_context_tokens", 160),
        )
        return cls(
            negatives=geti("negatives", 19), alpha=getf("alpha", 0.5),
            context_mode=ContextMode(kv.get("context_mode", "mask_slot")),
            sememe_fusion=getb("sememe_fusion", True),
            train_quote_encoder=getb("train_quote_encoder", True),
            stage1_epochs=geti("stage1_epochs", 3), stage2_epochs=geti("stage2_epochs", 3),
            batch_size=geti("batch_size", 32), initial_lr=getf("initial_lr", 1e-3),
            weight_decay=getf("weight_decay", 0.01), patience=geti("patience", 2),
            seed=geti("seed", 0), ablation_name=kv.get("ablation_name", "full"),
            encoder=enc,
        )


def configure_ablation(name: str, base: TrainConfig | None = None) -> TrainConfig:
    """Build the flag combination for one named ablation."""
    if name not in ABLATIONS:
        raise ValueError(f"unknown ablation {name!r}; valid names: {', '.join(ABLATIONS)}")
    config = base or TrainConfig()
    config = replace(config, ablation_name=name,
                     context_mode=ContextMode.MASK_SLOT,
                     sememe_fusion=True, train_quote_encoder=True)
    if name == "full":
        return config
    config = replace(config, sememe_fusion=False)
    if name == "no_sememe":
        return config
    if name == "no_retrain":
        return replace(config, stage2_epochs=0)
    config = replace(config, train_quote_encoder=False)
    if name == "no_simtrain":
        return config
    return replace(config, context_mode=ContextMode.SEP_CLS)  # sim_baseline


@dataclass
class TrainState:
    epoch: int = 0
    step: int = 0
    best_validation_mrr: float = float("-inf")
    best_checkpoint: dict | None = None


# ---------------------------------------------------------------------------
# Losses and sampling

def sample_negatives(
    gold_id: int, catalog_ids: Sequence[int], n: int, rng: random.Random
) -> list[int]:
    """N distinct non-gold ids, uniform without replacement."""
    pool = [q for q in catalog_ids if q != gold_id]
    if len(pool) < n:
        raise ValueError(f"catalog of {len(catalog_ids)} too small for {n} negatives")
    return rng.sample(pool, n)


def _as_tensor(x) -> torch.Tensor:
    t = torch.as_tensor(x)
    if not torch.isfinite(t).all():
        raise ValueError("non-finite values in loss input")
    return t


def pseudo_rank_loss(c_vec, gold_vec, neg_vecs) -> torch.Tensor:
    """-log of the gold quote's softmax weight among the sampled quotes."""
    c = _as_tensor(c_vec)
    gold = _as_tensor(gold_vec)
    negs = _as_tensor(neg_vecs)
    logits = torch.cat([(gold * c).sum().reshape(1), negs @ c])
    return torch.logsumexp(logits, dim=0) - logits[0]


def full_softmax_loss(c_vec, quote_index: QuoteIndex, gold_id: int) -> torch.Tensor:
    """Cross-entropy of the gold quote under softmax over the whole catalog."""
    c = _as_tensor(c_vec)
    matrix = torch.as_tensor(quote_index.matrix, dtype=c.dtype)
    row = quote_index.row_of(gold_id)
    logits = matrix @ c
    return torch.logsumexp(logits, dim=0) - logits[row]


# ---------------------------------------------------------------------------
# Training loop

def _linear_decay(optimizer, total_steps: int):
    return torch.optim.lr_scheduler.LambdaLR(
        optimizer, lambda step: max(0.0, 1.0 - step / max(1, total_steps)))


def _validate(model: DualEncoder, valid: list[ContextQuotePair],
              catalog: Sequence[Quote]) -> float:
    index = model.build_quote_index(catalog)
    report = evaluate(model.encode_context, index, valid, "full")
    return report.mrr


def run_two_stage(
    config: TrainConfig,
    dataset: list[ContextQuotePair],
    catalog: Sequence[Quote],
    lexicon: SememeLexicon | None,
    out_dir: str | Path,
) -> DualEncoder:
    """Train and persist the best-by-validation-MRR checkpoint."""
    if config.sememe_fusion and lexicon is None:
        raise ValueError("sememe_fusion=True requires a lexicon")
    if config.encoder.share_encoders and config.stage2_epochs > 0:
        raise ValueError("stage 2 freezes the quote encoder; incompatible with shared weights")

    train = [p for p in dataset if p.split == "train"]
    valid = [p for p in dataset if p.split == "valid"]
    if not train or not valid:
        raise ValueError("dataset must contain train and valid splits")

    torch.manual_seed(config.seed)
    rng = random.Random(config.seed)
    catalog = sorted(catalog, key=lambda q: q.id)
    catalog_ids = [q.id for q in catalog]
    quote_text = {q.id: q.text for q in catalog}

    vocab = Vocab.build([q.text for q in catalog]
                        + [p.left for p in train] + [p.right for p in train])
    model = DualEncoder(
        vocab, config.encoder, context_mode=config.context_mode,
        lexicon=lexicon if config.sememe_fusion else None,
        fusion_alpha=config.alpha if config.sememe_fusion else 0.0,
    )

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    log_file = open(out / "train.log", "w", encoding="utf-8")
    state = TrainState()

    def record(stage: int, loss: float, lr: float) -> None:
        log_file.write(f"step={state.step} stage={stage} epoch={state.epoch} "
                       f"loss={loss:.6f} lr={lr:.6e}\n")

    def check_finite(loss: torch.Tensor, stage: int) -> None:
        if not torch.isfinite(loss):
            torch.save({"state_dict": model.state_dict(), "step": state.step,
                        "stage": stage, "epoch": state.epoch}, out / "diverged.pt")
        if not torch.isfinite(loss):
            raise RuntimeError(f"training diverged at step {state.step}; state dumped")

    def run_validation(stage: int) -> None:
        val_mrr = _validate(model, valid, catalog)
        logger.info("stage %d epoch %d: validation MRR %.4f", stage, state.epoch, val_mrr)
        if val_mrr > state.best_validation_mrr:
            state.best_validation_mrr = val_mrr
            state.best_checkpoint = copy.deepcopy(model.state_dict())

    # ----- stage 1: simultaneous training with sampled negatives -----------
    stage1_params = list(model.context_encoder.parameters())
    if config.train_quote_encoder:
        stage1_params += [p for p in model.quote_encoder.parameters()
                          if not any(p is q for q in stage1_params)]
        if model.sememe_table is not None:
            stage1_params += list(model.sememe_table.parameters())
    if config.stage1_epochs > 0:
        optimizer = torch.optim.AdamW(stage1_params, lr=config.initial_lr,
                                      weight_decay=config.weight_decay)
        steps_per_epoch = math.ceil(len(train) / config.batch_size)
        scheduler = _linear_decay(optimizer, config.stage1_epochs * steps_per_epoch)
        if not config.train_quote_encoder:
            model.quote_encoder.requires_grad_(False)
        stale = 0
        for _ in range(config.stage1_epochs):
            state.epoch += 1
            model.train()
            order = list(range(len(train)))
            rng.shuffle(order)
            for start in range(0, len(order), config.batch_size):
                batch = [train[i] for i in order[start:start + config.batch_size]]
                cand_ids = [
                    [p.quote_id] + sample_negatives(p.quote_id, catalog_ids,
                                                    config.negatives, rng)
                    for p in batch
                ]
                unique = sorted({q for ids in cand_ids for q in ids})
                pos = {q: i for i, q in enumerate(unique)}
                q_vecs = model.forward_quotes([quote_text[q] for q in unique])
                c_vecs = model.forward_contexts([(p.left, p.right) for p in batch])
                rows = torch.tensor([[pos[q] for q in ids] for ids in cand_ids])
                logits = (q_vecs[rows] * c_vecs[:, None, :]).sum(-1)
                loss = nn.functional.cross_entropy(
                    logits, torch.zeros(len(batch), dtype=torch.long))
                check_finite(loss, stage=1)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                scheduler.step()
                state.step += 1
                record(1, float(loss.detach()), scheduler.get_last_lr()[0])
            before = state.best_validation_mrr
            run_validation(stage=1)
            stale = 0 if state.best_validation_mrr > before else stale + 1
            if stale > config.patience:
                break

    # ----- stage 2: context encoder only, full softmax ---------------------
    if config.stage2_epochs > 0:
        if state.best_checkpoint is not None:
            model.load_state_dict(state.best_checkpoint)
        fp_before = model.fingerprint()
        model.quote_encoder.requires_grad_(False)
        if model.sememe_table is not None:
            model.sememe_table.requires_grad_(False)
        index = model.build_quote_index(catalog)
        matrix = torch.as_tensor(index.matrix, dtype=torch.float32)
        gold_row = {q: i for i, q in enumerate(index.quote_ids.tolist())}

        optimizer = torch.optim.AdamW(model.context_encoder.parameters(),
                                      lr=config.initial_lr,
                                      weight_decay=config.weight_decay)
        steps_per_epoch = math.ceil(len(train) / config.batch_size)
        scheduler = _linear_decay(optimizer, config.stage2_epochs * steps_per_epoch)
        stale = 0
        for _ in range(config.stage2_epochs):
            state.epoch += 1
            model.train()
            model.quote_encoder.eval()
            order = list(range(len(train)))
            rng.shuffle(order)
            for start in range(0, len(order), config.batch_size):
                batch = [train[i] for i in order[start:start + config.batch_size]]
                c_vecs = model.forward_contexts([(p.left, p.right) for p in batch])
                logits = c_vecs @ matrix.T
                targets = torch.tensor([gold_row[p.quote_id] for p in batch])
                loss = nn.functional.cross_entropy(logits, targets)
                check_finite(loss, stage=2)
                optimizer.zero_grad()
                loss.backward()
                optimizer.step()
                scheduler.step()
                state.step += 1
                record(2, float(loss.detach()), scheduler.get_last_lr()[0])
            before = state.best_validation_mrr
            run_validation(stage=2)
            stale = 0 if state.best_validation_mrr > before else stale + 1
            if stale > config.patience:
                break
        assert model.fingerprint() == fp_before, "stage 2 must not move the quote encoder"

    if state.best_checkpoint is not None:
        model.load_state_dict(state.best_checkpoint)
    model.eval()
    model.save(out)
    model.build_quote_index(catalog).save(out / "index.npz")
    write_quotes(catalog, out / "quotes.jsonl")
    log_file.close()
    return model


def evaluate_checkpoint(
    model: DualEncoder,
    dataset: list[ContextQuotePair],
    catalog: Sequence[Quote],
    split: str = "test",
    mode: str = "full",
) -> EvalReport:
    pairs = [p for p in dataset if p.split == split]
    index = model.build_quote_index(sorted(catalog, key=lambda q: q.id))
    return evaluate(model.encode_context, index, pairs, mode,
                    expected_fingerprint=model.fingerprint())
