"""Mining context-quote pairs from raw corpora.

Pipeline: load quotes -> scan documents with a multi-pattern automaton ->
extract context windows -> dedup/filter/cap -> train/valid/test split.

Matching is done over *normalized* unit streams (case-folded, with
punctuation-only units dropped) while context extraction works on the
original unit stream, so contexts keep their surface form.
"""

from __future__ import annotations

import json
import logging
import random
import unicodedata
from pathlib import Path
from typing import Callable, Iterable, Iterator, Sequence

from .matcher import AhoCorasick
from .sentences import split_into_sentences
from .types import BuildConfig, ContextQuotePair, Quote, QuoteOccurrence

logger = logging.getLogger(__name__)

SPLITS = ("train", "valid", "test")


# ---------------------------------------------------------------------------
# Quote loading

def load_quote_set(
    path: str | Path,
    splitter: Callable[[str], list[str]] = split_into_sentences,
) -> list[Quote]:
    """Load a JSONL quote file ({"id": int, "text": str} per line).

    Returns quotes sorted by id. Duplicate ids reject the whole file;
    empty quote texts are skipped with a warning.
    """
    quotes: dict[int, Quote] = {}
    skipped = 0
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
                qid = int(obj["id"])
                text = str(obj["text"])
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as e:
                raise ValueError(f"{path}: malformed quote on line {lineno}: {e}") from e
            if qid in quotes:
                raise ValueError(f"{path}: duplicate quote id {qid} on line {lineno}")
            if not text.strip():
                skipped += 1
                continue
            quotes[qid] = Quote(id=qid, text=text, sentences=tuple(splitter(text)))
    if skipped:
        logger.warning("%s: skipped %d quotes with empty text", path, skipped)
    return [quotes[qid] for qid in sorted(quotes)]


# ---------------------------------------------------------------------------
# Unitization and normalization

def unitize(text: str, unit: str) -> list[str]:
    """Split a document into context/matching units."""
    if unit == "word":
        return text.split()
    return list(text)


def _is_puncty(ch: str) -> bool:
    if ch.isspace():
        return True
    cat = unicodedata.category(ch)
    return cat.startswith("P") or cat.startswith("S") or cat.startswith("Z")


def normalize_unit(u: str, unit: str) -> str:
    """Case-fold a unit; punctuation-only units normalize to ''."""
    if unit == "word":
        start, end = 0, len(u)
        while start < end and _is_puncty(u[start]):
            start += 1
        while end > start and _is_puncty(u[end - 1]):
            end -= 1
        return u[start:end].casefold()
    return "" if _is_puncty(u) else u.casefold()


def sentence_pattern(sentence: str, unit: str) -> tuple[str, ...]:
    """Normalized unit sequence used to match one constituent sentence."""
    return tuple(
        n for n in (normalize_unit(u, unit) for u in unitize(sentence, unit)) if n
    )


# ---------------------------------------------------------------------------
# Corpus scanning

def build_automaton(catalog: Sequence[Quote], unit: str) -> AhoCorasick:
    ac = AhoCorasick()
    for quote in catalog:
        for s_idx, sentence in enumerate(quote.sentences):
            pattern = sentence_pattern(sentence, unit)
            if pattern:
                ac.add_pattern(pattern, (quote.id, s_idx))
    ac.build()
    return ac


def _scan_document(
    doc_id: str, units: list[str], ac: AhoCorasick, unit: str
) -> list[QuoteOccurrence]:
    norm_units: list[str] = []
    orig_idx: list[int] = []
    for i, u in enumerate(units):
        n = normalize_unit(u, unit)
        if n:
            norm_units.append(n)
            orig_idx.append(i)
    if not norm_units:
        return []

    raw = ac.scan(norm_units)
    # chain consecutive constituent sentences of the same quote: a match of
    # sentence s+1 starting exactly where sentence s ended (in the
    # normalized stream) means only punctuation/whitespace intervenes
    by_quote: dict[int, dict[tuple[int, int], int]] = {}
    for (qid, s_idx), nstart, nend in raw:
        by_quote.setdefault(qid, {})[(s_idx, nstart)] = nend

    candidates: list[QuoteOccurrence] = []
    for qid, matches in by_quote.items():
        ends = {(s_idx, nend) for (s_idx, nstart), nend in matches.items()}
        for (s_idx, nstart), nend in matches.items():
            if (s_idx - 1, nstart) in ends:
                continue  # not a chain head
            last_s, last_end = s_idx, nend
            while (last_s + 1, last_end) in matches:
                last_end = matches[(last_s + 1, last_end)]
                last_s += 1
            span = (orig_idx[nstart], orig_idx[last_end - 1] + 1)
            candidates.append(
                QuoteOccurrence(
                    quote_id=qid,
                    document_id=doc_id,
                    span=span,
                    sentence_range=(s_idx, last_s + 1),
                )
            )

    # overlap resolution: more constituent sentences wins, then longer span,
    # then earlier span, then lower quote id
    candidates.sort(
        key=lambda o: (-o.num_sentences, o.span[0] - o.span[1], o.span[0], o.quote_id)
    )
    accepted: list[QuoteOccurrence] = []
    taken: list[tuple[int, int]] = []
    for occ in candidates:
        s, e = occ.span
        if any(s < te and ts < e for ts, te in taken):
            continue
        accepted.append(occ)
        taken.append((s, e))
    accepted.sort(key=lambda o: (o.span[0], o.quote_id))
    return accepted


def scan_corpus(
    document_stream: Iterable[tuple[str, str]],
    catalog: Sequence[Quote],
    config: BuildConfig,
) -> list[QuoteOccurrence]:
    """Find all quote occurrences in a stream of (doc_id, text) documents.

    Output is sorted by (document_id, span start).
    """
    ac = build_automaton(catalog, config.unit)
    occurrences: list[QuoteOccurrence] = []
    for doc_id, text in document_stream:
        occurrences.extend(_scan_document(doc_id, unitize(text, config.unit), ac, config.unit))
    occurrences.sort(key=lambda o: (o.document_id, o.span[0], o.quote_id))
    return occurrences


def extract_context(
    document_text: str, occurrence: QuoteOccurrence, config: BuildConfig
) -> ContextQuotePair:
    """Take up to ``window_size`` units before/after the occurrence span."""
    units = unitize(document_text, config.unit)
    start, end = occurrence.span
    if not (0 <= start < end <= len(units)):
        raise ValueError(f"occurrence span {occurrence.span} out of range for document")
    w = config.window_size
    joiner = " " if config.unit == "word" else ""
    left = joiner.join(units[max(0, start - w):start])
    right = joiner.join(units[end:end + w])
    return ContextQuotePair(
        left=left,
        right=right,
        quote_id=occurrence.quote_id,
        source_document_id=occurrence.document_id,
    )


# ---------------------------------------------------------------------------
# Filtering and splitting

def dedup_filter_cap(
    pairs: list[ContextQuotePair], config: BuildConfig, rng: random.Random
) -> tuple[list[ContextQuotePair], set[int]]:
    """Dedup exact (left, right, quote_id) triples, drop rare quotes,
    down-sample over-frequent quotes to the cap.

    Returns (surviving pairs, surviving quote ids); deterministic for a
    given rng state and input order.
    """
    seen: set[tuple[str, str, int]] = set()
    by_quote: dict[int, list[ContextQuotePair]] = {}
    for p in pairs:
        k = p.key()
        if k in seen:
            continue
        seen.add(k)
        by_quote.setdefault(p.quote_id, []).append(p)

    survivors: list[ContextQuotePair] = []
    surviving_ids: set[int] = set()
    for qid in sorted(by_quote):
        qpairs = by_quote[qid]
        if len(qpairs) < config.min_occurrences:
            continue
        if len(qpairs) > config.max_pairs_per_quote:
            idx = sorted(rng.sample(range(len(qpairs)), config.max_pairs_per_quote))
            qpairs = [qpairs[i] for i in idx]
        survivors.extend(qpairs)
        surviving_ids.add(qid)
    if not survivors:
        raise ValueError("no pairs survive filtering; lower min_occurrences or add corpus data")
    return survivors, surviving_ids


def split_dataset(
    pairs: list[ContextQuotePair], config: BuildConfig, rng: random.Random
) -> list[ContextQuotePair]:
    """Assign train/valid/test labels.

    Every quote gets at least one valid and one test pair; exactly
    ``zero_shot_quote_count`` quotes get no training pairs (their pairs
    are divided between valid and test); remaining pairs fill the global
    split ratios greedily.
    """
    by_quote: dict[int, list[ContextQuotePair]] = {}
    for p in pairs:
        by_quote.setdefault(p.quote_id, []).append(p)

    too_few = sorted(q for q, ps in by_quote.items() if len(ps) < 2)
    if too_few:
        raise ValueError(
            f"quotes need >= 2 pairs to appear in both valid and test; offenders: {too_few}"
        )
    if config.zero_shot_quote_count >= len(by_quote):
        raise ValueError(
            f"zero_shot_quote_count={config.zero_shot_quote_count} must be < "
            f"number of surviving quotes ({len(by_quote)})"
        )

    # quotes with exactly 2 pairs cannot hold a training pair, so they must
    # be part of the zero-shot set
    forced = sorted(q for q, ps in by_quote.items() if len(ps) == 2)
    if len(forced) > config.zero_shot_quote_count:
        raise ValueError(
            f"{len(forced)} quotes have exactly 2 pairs but only "
            f"{config.zero_shot_quote_count} zero-shot slots; offenders: {forced}"
        )
    eligible = sorted(q for q in by_quote if q not in set(forced))
    extra = rng.sample(eligible, config.zero_shot_quote_count - len(forced))
    zero_shot = set(forced) | set(extra)

    counts = {s: 0 for s in SPLITS}
    ratios = dict(zip(SPLITS, config.split_ratios))
    leftovers: list[ContextQuotePair] = []

    for qid in sorted(by_quote):
        qpairs = list(by_quote[qid])
        rng.shuffle(qpairs)
        if qid in zero_shot:
            for i, p in enumerate(qpairs):
                p.split = "valid" if i % 2 == 0 else "test"
                counts[p.split] += 1
        else:
            qpairs[0].split = "valid"
            qpairs[1].split = "test"
            qpairs[2].split = "train"
            counts["valid"] += 1
            counts["test"] += 1
            counts["train"] += 1
            leftovers.extend(qpairs[3:])

    total = sum(counts.values())
    for p in leftovers:
        total += 1
        # largest-deficit split relative to the target ratio
        p.split = max(SPLITS, key=lambda s: ratios[s] * total - counts[s])
        counts[p.split] += 1
    return pairs


# ---------------------------------------------------------------------------
# IO and orchestration

def iter_documents(corpus_dir: str | Path, doc_per_block: bool = False) -> Iterator[tuple[str, str]]:
    """Yield (doc_id, text) from a directory of UTF-8 plain-text files.

    With ``doc_per_block`` each blank-line-separated block is its own
    document. Unreadable files are skipped with a warning.
    """
    errors = 0
    for path in sorted(Path(corpus_dir).iterdir()):
        if not path.is_file():
            continue
        try:
            text = path.read_text(encoding="utf-8")
        except (OSError, UnicodeDecodeError) as e:
            logger.warning("skipping unreadable document %s: %s", path, e)
            errors += 1
            continue
        if doc_per_block:
            for i, block in enumerate(text.split("\n\n")):
                if block.strip():
                    yield f"{path.name}#{i}", block
        else:
            yield path.name, text
    if errors:
        logger.warning("%d documents skipped due to read errors", errors)


def write_dataset(pairs: Sequence[ContextQuotePair], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in pairs:
            f.write(json.dumps(
                {"quote_id": p.quote_id, "left": p.left, "right": p.right, "split": p.split},
                ensure_ascii=False,
            ) + "\n")


def read_dataset(path: str | Path) -> list[ContextQuotePair]:
    pairs = []
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            obj = json.loads(line)
            pairs.append(ContextQuotePair(
                left=obj["left"], right=obj["right"], quote_id=obj["quote_id"],
                source_document_id=obj.get("source_document_id", ""),
                split=obj.get("split", "unassigned"),
            ))
    return pairs


def write_quotes(catalog: Sequence[Quote], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for q in catalog:
            f.write(json.dumps({"id": q.id, "text": q.text}, ensure_ascii=False) + "\n")


def build_dataset(
    quotes_path: str | Path,
    corpus_dir: str | Path,
    config: BuildConfig,
    out_dir: str | Path,
) -> tuple[list[ContextQuotePair], list[Quote]]:
    """Run the whole pipeline and write dataset.jsonl + quotes.jsonl."""
    catalog = load_quote_set(quotes_path)
    docs = {doc_id: text for doc_id, text in iter_documents(corpus_dir, config.doc_per_block)}
    occurrences = scan_corpus(docs.items(), catalog, config)
    pairs = [extract_context(docs[o.document_id], o, config) for o in occurrences]
    rng = random.Random(config.rng_seed)
    pairs, surviving_ids = dedup_filter_cap(pairs, config, rng)
    pairs = split_dataset(pairs, config, rng)
    surviving = [q for q in catalog if q.id in surviving_ids]

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_dataset(pairs, out / "dataset.jsonl")
    write_quotes(surviving, out / "quotes.jsonl")
    logger.info(
        "built dataset: %d pairs, %d quotes (train/valid/test = %s)",
        len(pairs), len(surviving),
        "/".join(str(sum(1 for p in pairs if p.split == s)) for s in SPLITS),
    )
    return pairs, surviving
