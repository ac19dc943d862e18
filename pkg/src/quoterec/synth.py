"""Synthetic fixtures: planted-quote corpora and cue-word training sets.

Used by the test suite and the end-to-end demo. The corpus generator
plants quotes at known word positions so the expected context-quote
pairs can be derived from the plan alone, independent of the scanner.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path

from .corpus.types import ContextQuotePair


@dataclass(frozen=True)
class Plant:
    """One planted quote occurrence: word offsets into the document."""

    document_id: str
    quote_id: int
    start: int
    end: int


@dataclass
class SyntheticCorpus:
    quotes: list[dict]                 # {"id", "text"}
    documents: dict[str, str]          # doc_id -> text
    plan: list[Plant]

    def expected_pairs(self, window: int) -> list[tuple[str, str, int]]:
        """(left, right, quote_id) triples derived purely from the plan."""
        out = []
        for p in self.plan:
            words = self.documents[p.document_id].split()
            left = " ".join(words[max(0, p.start - window):p.start])
            right = " ".join(words[p.end:p.end + window])
            out.append((left, right, p.quote_id))
        return out

    def write(self, out_dir: str | Path) -> tuple[Path, Path]:
        out = Path(out_dir)
        corpus_dir = out / "corpus"
        corpus_dir.mkdir(parents=True, exist_ok=True)
        quotes_path = out / "quotes.jsonl"
        with open(quotes_path, "w", encoding="utf-8") as f:
            for q in self.quotes:
                f.write(json.dumps(q, ensure_ascii=False) + "\n")
        for doc_id, text in self.documents.items():
            (corpus_dir / doc_id).write_text(text, encoding="utf-8")
        return quotes_path, corpus_dir


def make_planted_corpus(
    num_documents: int = 200,
    num_quotes: int = 50,
    occurrences_range: tuple[int, int] = (6, 30),
    filler_vocab: int = 400,
    seed: int = 0,
) -> SyntheticCorpus:
    """Build a corpus of filler text with quotes planted at known spots.

    Quote words are unique per quote so plants can never overlap or nest,
    which keeps the expected pair set exactly derivable from the plan.
    """
    rng = random.Random(seed)
    fillers = [f"w{i:03d}" for i in range(filler_vocab)]

    quotes = []
    quote_words: dict[int, list[str]] = {}
    for qid in range(num_quotes):
        n_sent = rng.randint(1, 3)
        words: list[str] = []
        sentences = []
        for s in range(n_sent):
            sent_words = [f"q{qid:02d}s{s}t{k}" for k in range(rng.randint(3, 7))]
            words.extend(sent_words)
            sentences.append(" ".join(sent_words) + ".")
        quotes.append({"id": qid, "text": " ".join(sentences)})
        quote_words[qid] = words

    # assign each quote's occurrences to random documents
    doc_plants: dict[int, list[int]] = {i: [] for i in range(num_documents)}
    for qid in range(num_quotes):
        for _ in range(rng.randint(*occurrences_range)):
            doc_plants[rng.randrange(num_documents)].append(qid)

    documents: dict[str, str] = {}
    plan: list[Plant] = []
    for doc_i in range(num_documents):
        doc_id = f"doc{doc_i:04d}.txt"
        words: list[str] = []
        words.extend(rng.choices(fillers, k=rng.randint(20, 60)))
        for qid in doc_plants[doc_i]:
            qwords = quote_words[qid]
            start = len(words)
            # plant with the sentence-final periods of the quote text
            words.extend(documents_words_with_punct(quotes[qid]["text"]))
            plan.append(Plant(doc_id, qid, start, start + len(qwords)))
            words.extend(rng.choices(fillers, k=rng.randint(10, 60)))
        documents[doc_id] = " ".join(words)
    return SyntheticCorpus(quotes=quotes, documents=documents, plan=plan)


def documents_words_with_punct(quote_text: str) -> list[str]:
    return quote_text.split()


def make_cue_dataset(
    num_quotes: int = 50,
    num_contexts: int = 2000,
    cues_per_quote: int = 2,
    filler_vocab: int = 200,
    context_len: tuple[int, int] = (6, 14),
    zero_shot_quote_count: int = 0,
    confusable_quotes: bool = False,
    body_words: int = 3,
    adjacency_cues: bool = False,
    seed: int = 0,
) -> tuple[list[dict], list[ContextQuotePair], dict[str, list[str]]]:
    """Build a learnable synthetic dataset with planted lexical cues.

    Each quote owns a few cue words; a context for that quote contains
    exactly one of them amid filler. The sememe lexicon links all cue
    words of a quote (and its quote-text head word) to one shared sememe,
    so sememe fusion carries the cue-quote association into the quote
    encoder.

    With ``confusable_quotes`` all quote bodies share the same words and
    only the head word distinguishes them, which makes the quote-side
    representations hard to separate without extra per-quote signal.

    Returns (quotes, labeled pairs, sememe lexicon word -> [sememes]).
    """
    rng = random.Random(seed)
    fillers = [f"f{i:03d}" for i in range(filler_vocab)]

    quotes = []
    cues: dict[int, list[str]] = {}
    lexicon: dict[str, list[str]] = {}
    for qid in range(num_quotes):
        head = f"theme{qid:02d}"
        if confusable_quotes:
            body = [f"qwshared{k}" for k in range(body_words)]
        else:
            body = [f"qw{qid:02d}{k}" for k in range(body_words)]
        quotes.append({"id": qid, "text": " ".join([head] + body) + "."})
        cues[qid] = [f"cue{qid:02d}{j}" for j in range(cues_per_quote)]
        sememe = f"S{qid:02d}"
        for w in cues[qid] + [head]:
            lexicon[w] = [sememe]

    all_cues = [c for qid in range(num_quotes) for c in cues[qid]]
    pairs: list[ContextQuotePair] = []
    for i in range(num_contexts):
        qid = i % num_quotes
        cue = rng.choice(cues[qid])
        n_left = rng.randint(*context_len)
        n_right = rng.randint(*context_len)
        if adjacency_cues:
            # every word is some quote's cue; only the word adjacent to
            # the quote slot identifies the gold quote
            left = rng.choices(all_cues, k=n_left)
            left[-1] = cue
            right = rng.choices(all_cues, k=n_right)
        else:
            left = rng.choices(fillers, k=n_left)
            left[rng.randrange(n_left)] = cue
            right = rng.choices(fillers, k=n_right)
            # a second cue on the right half keeps left-only evaluation weaker
            if rng.random() < 0.5:
                right[rng.randrange(n_right)] = rng.choice(cues[qid])
        pairs.append(ContextQuotePair(
            left=" ".join(left), right=" ".join(right), quote_id=qid,
            source_document_id=f"synth{i}",
        ))

    zero_shot = set(rng.sample(range(num_quotes), zero_shot_quote_count))
    _assign_splits(pairs, zero_shot, rng)
    return quotes, pairs, lexicon


def _assign_splits(pairs: list[ContextQuotePair], zero_shot: set[int],
                   rng: random.Random) -> None:
    by_quote: dict[int, list[ContextQuotePair]] = {}
    for p in pairs:
        by_quote.setdefault(p.quote_id, []).append(p)
    for qid, qpairs in by_quote.items():
        rng.shuffle(qpairs)
        if qid in zero_shot:
            for i, p in enumerate(qpairs):
                p.split = "valid" if i % 2 == 0 else "test"
        else:
            qpairs[0].split = "valid"
            qpairs[1].split = "test"
            for i, p in enumerate(qpairs[2:]):
                p.split = "train" if i % 10 < 8 else ("valid" if i % 10 == 8 else "test")


def make_factor_dataset(
    factor_a_values: int = 10,
    factor_b_values: int = 10,
    contexts_per_quote: int = 20,
    filler_vocab: int = 150,
    context_len: tuple[int, int] = (6, 14),
    seed: int = 0,
) -> tuple[list[dict], list[ContextQuotePair], dict[str, list[str]]]:
    """Build a compositional dataset where sememes tie quotes together.

    Every quote is one (a, b) combination of two latent factors. Its two
    text words are unique surface forms, so without extra knowledge each
    quote must be learned from its own few contexts. The lexicon maps
    each word to its factor's sememe, which is shared across all quotes
    with that factor value; fusing it lets the quote encoder pool
    evidence across quotes and place them in a factorized space that
    matches the factor cue words appearing in contexts.
    """
    rng = random.Random(seed)
    fillers = [f"f{i:03d}" for i in range(filler_vocab)]

    quotes = []
    lexicon: dict[str, list[str]] = {}
    factors: dict[int, tuple[int, int]] = {}
    qid = 0
    for a in range(factor_a_values):
        for b in range(factor_b_values):
            wa, wb = f"qa{qid:03d}", f"qb{qid:03d}"
            quotes.append({"id": qid, "text": f"{wa} {wb}."})
            lexicon[wa] = [f"A{a:02d}"]
            lexicon[wb] = [f"B{b:02d}"]
            factors[qid] = (a, b)
            qid += 1

    pairs: list[ContextQuotePair] = []
    for q in range(qid):
        a, b = factors[q]
        for _ in range(contexts_per_quote):
            n_left = rng.randint(*context_len)
            n_right = rng.randint(*context_len)
            left = rng.choices(fillers, k=n_left)
            right = rng.choices(fillers, k=n_right)
            left[rng.randrange(n_left)] = f"ca{a:02d}{rng.randrange(2)}"
            right[rng.randrange(n_right)] = f"cb{b:02d}{rng.randrange(2)}"
            pairs.append(ContextQuotePair(
                left=" ".join(left), right=" ".join(right), quote_id=q,
                source_document_id=f"synth{q}"))
    _assign_splits(pairs, set(), rng)
    return quotes, pairs, lexicon


def make_grouped_cue_dataset(
    num_groups: int = 12,
    quotes_per_group: int = 3,
    contexts_per_quote: int = 40,
    eval_contexts_per_zero_shot: int = 10,
    filler_vocab: int = 150,
    context_len: tuple[int, int] = (6, 14),
    body_words: int = 3,
    quote_cue_prob: float = 0.5,
    seed: int = 0,
) -> tuple[list[dict], list[ContextQuotePair], dict[str, list[str]]]:
    """Build a dataset where sememes are the only route to zero-shot quotes.

    Quotes come in topic groups. All quote bodies share the same words;
    only the head word distinguishes a quote, and the lexicon annotates
    each head with its group's sememe. Contexts carry one group cue word
    plus one quote-specific cue word. One quote per group is zero-shot:
    it has no training contexts, so its head embedding and its own cue
    words are never trained, and only the group sememe (shared with its
    trained group mates) can place its representation near the group.
    """
    rng = random.Random(seed)
    fillers = [f"f{i:03d}" for i in range(filler_vocab)]
    body = [f"qwshared{k}" for k in range(body_words)]

    quotes = []
    lexicon: dict[str, list[str]] = {}
    group_cues: dict[int, list[str]] = {}
    quote_cues: dict[int, list[str]] = {}
    group_of: dict[int, int] = {}
    zero_shot: set[int] = set()
    qid = 0
    for g in range(num_groups):
        group_cues[g] = [f"gcue{g:02d}{j}" for j in range(2)]
        for i in range(quotes_per_group):
            head = f"head{g:02d}q{i}"
            quotes.append({"id": qid, "text": " ".join([head] + body) + "."})
            lexicon[head] = [f"G{g:02d}"]
            quote_cues[qid] = [f"qcue{qid:02d}{j}" for j in range(2)]
            group_of[qid] = g
            if i == 0:
                zero_shot.add(qid)
            qid += 1

    def make_context(q: int) -> ContextQuotePair:
        n_left = rng.randint(*context_len)
        n_right = rng.randint(*context_len)
        left = rng.choices(fillers, k=n_left)
        right = rng.choices(fillers, k=n_right)
        left[rng.randrange(n_left)] = rng.choice(group_cues[group_of[q]])
        # some contexts carry only the group cue, so the model cannot get
        # away with reading quote cues alone and must learn group structure
        if rng.random() < quote_cue_prob:
            right[rng.randrange(n_right)] = rng.choice(quote_cues[q])
        return ContextQuotePair(left=" ".join(left), right=" ".join(right),
                                quote_id=q, source_document_id=f"synth{q}")

    pairs: list[ContextQuotePair] = []
    for q in range(qid):
        count = (eval_contexts_per_zero_shot if q in zero_shot
                 else contexts_per_quote)
        pairs.extend(make_context(q) for _ in range(count))
    _assign_splits(pairs, zero_shot, rng)
    return quotes, pairs, lexicon
