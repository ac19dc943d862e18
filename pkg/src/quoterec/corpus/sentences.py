"""Sentence splitting for quotes.

The splitter is deliberately simple and pluggable: any callable
``str -> list[str]`` can be passed to :func:`quoterec.corpus.load_quote_set`.
The default splits after runs of sentence-final punctuation (Western and
CJK) followed by whitespace or end of string, and is lossless modulo
inter-sentence whitespace.
"""

from __future__ import annotations

import re

_SENT_END = re.compile(r"([.!?…。！？;；]+['\"’”）)\]]*)(\s+|$)")


def split_into_sentences(text: str) -> list[str]:
    """Split ``text`` into sentences; falls back to the whole text.

    >>> split_into_sentences("A. B.")
    ['A.', 'B.']
    >>> split_into_sentences("no punctuation")
    ['no punctuation']
    """
    if not text:
        raise ValueError("cannot split empty text")
    sentences = []
    pos = 0
    for m in _SENT_END.finditer(text):
        chunk = text[pos:m.end(1)].strip()
        if chunk:
            sentences.append(chunk)
        pos = m.end()
    tail = text[pos:].strip()
    if tail:
        sentences.append(tail)
    if not sentences:
        return [text.strip() or text]
    return sentences
