"""Command-line entry points tying the pipeline together."""

from __future__ import annotations

import json
import logging
import os
from pathlib import Path

import click

from .corpus.builder import build_dataset as _build_dataset
from .corpus.builder import load_quote_set, read_dataset, write_dataset, write_quotes
from .corpus.types import BuildConfig
from .crm import CrmModel
from .encoder import DualEncoder
from .evaluation import (
    DEFAULT_BUCKET_EDGES,
    evaluate,
    frequency_buckets,
    training_counts,
)
from .sememes import SememeLexicon
from .service import Recommender, create_app, default_ui_dir
from .synth import make_cue_dataset, make_planted_corpus
from .training import ABLATIONS, TrainConfig, configure_ablation, run_two_stage

logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")


def _parse_ratios(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(":")]
    if len(parts) != 3:
        raise click.BadParameter("ratios must look like 8:1:1")
    total = sum(parts)
    return (parts[0] / total, parts[1] / total, parts[2] / total)


def _load_data_dir(data_dir: Path):
    dataset = read_dataset(data_dir / "dataset.jsonl")
    catalog = load_quote_set(data_dir / "quotes.jsonl")
    lexicon_path = data_dir / "lexicon.jsonl"
    lexicon = SememeLexicon.load(lexicon_path) if lexicon_path.exists() else None
    return dataset, catalog, lexicon


@click.group()
def main() -> None:
    """Quote recommendation workbench."""


@main.command("build-dataset")
@click.option("--quotes", "quotes_path", required=True, type=click.Path(exists=True))
@click.option("--corpus", "corpus_dir", required=True, type=click.Path(exists=True))
@click.option("--window", default=40, show_default=True)
@click.option("--unit", type=click.Choice(["word", "char"]), default="word", show_default=True)
@click.option("--min-occ", default=5, show_default=True)
@click.option("--cap", default=200, show_default=True)
@click.option("--ratios", default="8:1:1", show_default=True)
@click.option("--zero-shot", default=100, show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--doc-per-block", is_flag=True,
              help="treat blank-line-separated blocks as documents")
@click.option("--out", "out_dir", required=True, type=click.Path())
def build_dataset_cmd(quotes_path, corpus_dir, window, unit, min_occ, cap,
                      ratios, zero_shot, seed, doc_per_block, out_dir):
    """Mine context-quote pairs from a corpus and split them."""
    config = BuildConfig(
        window_size=window, unit=unit, min_occurrences=min_occ,
        max_pairs_per_quote=cap, split_ratios=_parse_ratios(ratios),
        zero_shot_quote_count=zero_shot, rng_seed=seed,
        doc_per_block=doc_per_block,
    )
    pairs, quotes = _build_dataset(quotes_path, corpus_dir, config, out_dir)
    click.echo(f"wrote {len(pairs)} pairs over {len(quotes)} quotes to {out_dir}")


@main.command("train")
@click.option("--config", "config_path", type=click.Path(exists=True),
              help="flat key=value training config file")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--ablation", type=click.Choice(ABLATIONS), default="full",
              show_default=True)
def train_cmd(config_path, data_dir, out_dir, ablation):
    """Run two-stage training and save the best checkpoint."""
    base = TrainConfig.from_file(config_path) if config_path else TrainConfig()
    config = configure_ablation(ablation, base)
    dataset, catalog, lexicon = _load_data_dir(Path(data_dir))
    model = run_two_stage(config, dataset, catalog, lexicon, out_dir)
    click.echo(f"checkpoint saved to {out_dir} (fingerprint {model.fingerprint()})")


@main.command("evaluate")
@click.option("--model", "model_dir", required=True, type=click.Path(exists=True))
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--split", type=click.Choice(["valid", "test"]), default="test",
              show_default=True)
@click.option("--mode", type=click.Choice(["full", "left_only"]), default="full",
              show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
@click.option("--buckets/--no-buckets", default=False,
              help="also compute frequency-bucket metrics")
def evaluate_cmd(model_dir, data_dir, split, mode, report_path, buckets):
    """Evaluate a checkpoint on a dataset split."""
    model = DualEncoder.load(model_dir)
    dataset, catalog, _ = _load_data_dir(Path(data_dir))
    pairs = [p for p in dataset if p.split == split]
    index = model.build_quote_index(catalog)
    report = evaluate(model.encode_context, index, pairs, mode,
                      expected_fingerprint=model.fingerprint())
    click.echo(f"{split}/{mode}: MRR={report.mrr:.4f} NDCG@5={report.ndcg5:.4f} "
               f"Recall@1/10/100={report.recall[1]:.4f}/{report.recall[10]:.4f}/"
               f"{report.recall[100]:.4f} "
               f"R~={report.median_rank:.0f} R-={report.mean_rank:.1f} "
               f"sigma={report.std_rank:.1f}")
    if buckets:
        counts = training_counts(dataset, [q.id for q in catalog])
        fb = frequency_buckets(report, counts, DEFAULT_BUCKET_EDGES)
        for b in fb.buckets:
            hi = b.high if b.high is not None else "inf"
            mrr_s = f"{b.mrr:.4f}" if b.mrr is not None else "-"
            click.echo(f"  freq [{b.low},{hi}): {b.quote_count} quotes, "
                       f"{b.num_queries} queries, MRR={mrr_s}")
    if report_path:
        report.save(report_path)
        click.echo(f"report written to {report_path}")


@main.command("sweep")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--n", "n_values", default="4,9,19,29,39", show_default=True)
@click.option("--config", "config_path", type=click.Path(exists=True))
@click.option("--out", "out_dir", required=True, type=click.Path())
def sweep_cmd(data_dir, n_values, config_path, out_dir):
    """Train/evaluate once per negative-sample count (same seed)."""
    from .evaluation import negative_sample_sweep

    base = TrainConfig.from_file(config_path) if config_path else TrainConfig()
    dataset, catalog, lexicon = _load_data_dir(Path(data_dir))
    ns = [int(x) for x in n_values.split(",")]
    reports = negative_sample_sweep(dataset, catalog, lexicon, ns, base, out_dir)
    for n, report in reports.items():
        click.echo(f"N={n}: valid MRR={report.mrr:.4f} NDCG@5={report.ndcg5:.4f}")
    summary = {str(n): r.to_dict() for n, r in reports.items()}
    for r in summary.values():
        r.pop("records")
    (Path(out_dir) / "sweep.json").write_text(json.dumps(summary, indent=2))


@main.command("baseline-crm")
@click.option("--data", "data_dir", required=True, type=click.Path(exists=True))
@click.option("--split", type=click.Choice(["valid", "test"]), default="test",
              show_default=True)
@click.option("--mode", type=click.Choice(["full", "left_only"]), default="full",
              show_default=True)
@click.option("--unit", type=click.Choice(["word", "char"]), default="word",
              show_default=True)
@click.option("--report", "report_path", type=click.Path(), default=None)
def baseline_crm_cmd(data_dir, split, mode, unit, report_path):
    """Score the tf-idf context-similarity baseline."""
    dataset, catalog, _ = _load_data_dir(Path(data_dir))
    train = [p for p in dataset if p.split == "train"]
    test = [p for p in dataset if p.split == split]
    model = CrmModel(train, [q.id for q in catalog], unit=unit)
    report = evaluate(model.encode_context, model.to_index(), test, mode)
    click.echo(f"CRM {split}/{mode}: MRR={report.mrr:.4f} NDCG@5={report.ndcg5:.4f} "
               f"Recall@1/10/100={report.recall[1]:.4f}/{report.recall[10]:.4f}/"
               f"{report.recall[100]:.4f}")
    if report_path:
        report.save(report_path)


def _checkpoint_option(checkpoint: str | None) -> Path:
    ckpt = checkpoint or os.environ.get("QUOTER_CHECKPOINT")
    if not ckpt:
        raise click.UsageError("pass --checkpoint or set QUOTER_CHECKPOINT")
    return Path(ckpt)


@main.command("recommend")
@click.option("--left", default="")
@click.option("--right", default="")
@click.option("-k", default=5, show_default=True)
@click.option("--checkpoint", type=click.Path(exists=True), default=None,
              help="defaults to $QUOTER_CHECKPOINT")
def recommend_cmd(left, right, k, checkpoint):
    """Print the top-k quotes for a context."""
    if not left.strip() and not right.strip():
        raise click.UsageError("provide --left and/or --right text")
    rec = Recommender.load(_checkpoint_option(checkpoint))
    response = rec.recommend(left, right, k)
    for item in response.results:
        click.echo(f"{item.rank:2d}. [{item.score:.3f}] {item.quote_text}")


@main.command("serve")
@click.option("--checkpoint", type=click.Path(exists=True), default=None,
              help="defaults to $QUOTER_CHECKPOINT")
@click.option("--port", default=8000, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--ui", "ui_dir", type=click.Path(), default=None,
              help="static UI bundle to mount at /ui")
def serve_cmd(checkpoint, port, host, ui_dir):
    """Run the read-only recommendation service."""
    import uvicorn

    rec = Recommender.load(_checkpoint_option(checkpoint))
    app = create_app(rec, ui_dir=ui_dir or default_ui_dir())
    uvicorn.run(app, host=host, port=port)


@main.command("make-synthetic")
@click.option("--kind", type=click.Choice(["corpus", "cue"]), default="corpus",
              show_default=True)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--quotes", "num_quotes", default=50, show_default=True)
@click.option("--documents", default=200, show_default=True,
              help="corpus kind: number of documents")
@click.option("--contexts", default=2000, show_default=True,
              help="cue kind: number of context-quote pairs")
@click.option("--seed", default=0, show_default=True)
def make_synthetic_cmd(kind, out_dir, num_quotes, documents, contexts, seed):
    """Generate a synthetic fixture for demos and smoke tests."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "corpus":
        corpus = make_planted_corpus(num_documents=documents,
                                     num_quotes=num_quotes, seed=seed)
        quotes_path, corpus_dir = corpus.write(out)
        click.echo(f"wrote {quotes_path} and {corpus_dir}/ "
                   f"({len(corpus.plan)} planted occurrences)")
    else:
        quotes, pairs, lexmap = make_cue_dataset(
            num_quotes=num_quotes, num_contexts=contexts, seed=seed)
        from .corpus.types import Quote
        write_quotes([Quote(id=q["id"], text=q["text"], sentences=(q["text"],))
                      for q in quotes], out / "quotes.jsonl")
        write_dataset(pairs, out / "dataset.jsonl")
        SememeLexicon.from_dict(lexmap).save(out / "lexicon.jsonl")
        click.echo(f"wrote cue dataset ({len(pairs)} pairs, {num_quotes} quotes) to {out}")


if __name__ == "__main__":
    main()
