"""Tokenisation and query construction.

Text is split on every code point that is not a letter, a decimal digit or a
combining mark.  Gujarati matras and viramas are marks, so they stay attached
to their consonants.  ZWJ/ZWNJ are kept inside tokens.  Only ASCII letters
are case-folded; nothing else is normalised, stemmed or stopped unless a
stoplist is supplied.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from os import PathLike
from typing import Iterable

import regex

from .errors import EmptyQuery

FIELD_MODES = ("T", "TD", "TDN")

_WORD = r"\p{L}\p{M}\p{Nd}"
_JOINERS = "\u200c\u200d"
# a token needs at least one letter, mark or digit; joiners alone do not count
_TOKEN_RE = regex.compile(f"[{_WORD}{_JOINERS}]*[{_WORD}][{_WORD}{_JOINERS}]*")
_ASCII_LOWER = {c: c + 32 for c in range(ord("A"), ord("Z") + 1)}


def normalize(text: str) -> str:
    return text.translate(_ASCII_LOWER)


def tokenize(text: str) -> list[str]:
    """Split ``text`` into index terms, preserving order.

    >>> tokenize("Microsoft માઇક્રોસોફ્ટ 2010!")
    ['microsoft', 'માઇક્રોસોફ્ટ', '2010']
    """
    return _TOKEN_RE.findall(normalize(text))


def read_stoplist(path: str | PathLike) -> frozenset[str]:
    """Load a stoplist: UTF-8, one term per line, ``#`` starts a comment."""
    terms = set()
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                terms.update(tokenize(line))
    return frozenset(terms)


@dataclass(frozen=True)
class Analyzer:
    """Tokeniser plus optional stoplist, shared by indexing and querying."""

    stopwords: frozenset[str] = field(default_factory=frozenset)

    @classmethod
    def from_stoplist(cls, path: str | PathLike | None) -> "Analyzer":
        if path is None:
            return cls()
        return cls(read_stoplist(path))

    def analyze(self, text: str) -> list[str]:
        tokens = tokenize(text)
        if self.stopwords:
            stop = self.stopwords
            tokens = [t for t in tokens if t not in stop]
        return tokens


DEFAULT_ANALYZER = Analyzer()


@dataclass(frozen=True)
class QueryBag:
    terms: dict[str, int]
    field_mode: str

    def __len__(self) -> int:
        return len(self.terms)

    def sorted_terms(self) -> list[tuple[str, int]]:
        return sorted(self.terms.items())


def topic_text(topic, field_mode: str) -> str:
    if field_mode not in FIELD_MODES:
        raise ValueError(f"field mode must be one of {FIELD_MODES}, got {field_mode!r}")
    parts: Iterable[str] = (topic.title, topic.desc, topic.narr)[: len(field_mode)]
    return "\n".join(parts)


def build_query_bag(topic, field_mode: str, analyzer: Analyzer = DEFAULT_ANALYZER) -> QueryBag:
    """Weighted term bag from the T, TD or TDN fields of ``topic``.

    Raises :class:`EmptyQuery` when no terms survive analysis.
    """
    counts = Counter(analyzer.analyze(topic_text(topic, field_mode)))
    if not counts:
        raise EmptyQuery(f"topic {topic.num} has no query terms in mode {field_mode}")
    return QueryBag(dict(counts), field_mode)
