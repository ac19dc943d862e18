"""Multi-pattern matching over unit sequences (Aho-Corasick).

Patterns are sequences of hashable units (normalized word tokens or
single characters). The automaton is built once from all constituent
sentences of all quotes, then each document is scanned in a single pass,
which keeps corpus scanning linear regardless of catalog size.
"""

from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, Sequence

Unit = Hashable


class AhoCorasick:
    """Aho-Corasick automaton over arbitrary hashable units."""

    def __init__(self) -> None:
        # node 0 is the root; parallel arrays keyed by node index
        self._goto: list[dict[Unit, int]] = [{}]
        self._fail: list[int] = [0]
        self._out: list[list[tuple[object, int]]] = [[]]  # (pattern_id, length)
        self._built = False

    def add_pattern(self, pattern: Sequence[Unit], pattern_id: object) -> None:
        if self._built:
            raise RuntimeError("cannot add patterns after build()")
        if not pattern:
            raise ValueError("empty pattern")
        node = 0
        for unit in pattern:
            nxt = self._goto[node].get(unit)
            if nxt is None:
                nxt = len(self._goto)
                self._goto.append({})
                self._fail.append(0)
                self._out.append([])
                self._goto[node][unit] = nxt
            node = nxt
        self._out[node].append((pattern_id, len(pattern)))

    def build(self) -> None:
        """Compute failure links breadth-first and merge output sets."""
        queue: deque[int] = deque()
        for child in self._goto[0].values():
            self._fail[child] = 0
            queue.append(child)
        while queue:
            node = queue.popleft()
            for unit, child in self._goto[node].items():
                queue.append(child)
                fail = self._fail[node]
                while fail and unit not in self._goto[fail]:
                    fail = self._fail[fail]
                self._fail[child] = self._goto[fail].get(unit, 0)
                if self._fail[child] == child:
                    self._fail[child] = 0
                self._out[child] = self._out[child] + self._out[self._fail[child]]
        self._built = True

    def scan(self, units: Iterable[Unit]) -> list[tuple[object, int, int]]:
        """Scan a unit stream; return (pattern_id, start, end) matches.

        Offsets are half-open indices into the scanned stream. All
        matches are reported, including overlapping ones.
        """
        if not self._built:
            raise RuntimeError("build() must be called before scan()")
        matches: list[tuple[object, int, int]] = []
        node = 0
        for pos, unit in enumerate(units):
            while node and unit not in self._goto[node]:
                node = self._fail[node]
            node = self._goto[node].get(unit, 0)
            for pattern_id, length in self._out[node]:
                matches.append((pattern_id, pos + 1 - length, pos + 1))
        return matches
