"""Shared fixtures: a tiny trained checkpoint reused across test modules."""

import pytest

from quoterec.corpus.types import Quote
from quoterec.sememes import SememeLexicon
from quoterec.synth import make_cue_dataset
from quoterec.training import TrainConfig, run_two_stage
from quoterec.encoder import EncoderConfig


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory):
    """Train a small model once and hand out (checkpoint_dir, catalog, pairs)."""
    quotes, pairs, lexmap = make_cue_dataset(
        num_quotes=8, num_contexts=96, cues_per_quote=1, filler_vocab=40, seed=0)
    catalog = [Quote(id=q["id"], text=q["text"], sentences=(q["text"],))
               for q in quotes]
    lexicon = SememeLexicon.from_dict(lexmap)
    config = TrainConfig(
        negatives=4, alpha=0.5, stage1_epochs=1, stage2_epochs=1,
        batch_size=16, initial_lr=1e-3, seed=0,
        encoder=EncoderConfig(dim=32, layers=1, heads=2, ffn_dim=64,
                              dropout=0.0, max_quote_tokens=16,
                              max_context_tokens=48))
    out = tmp_path_factory.mktemp("ckpt")
    run_two_stage(config, pairs, catalog, lexicon, out)
    return out, catalog, pairs
