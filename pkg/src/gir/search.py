"""Query execution: top-k document-at-a-time retrieval and run assembly."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ._backend import kernels
from .errors import EmptyQuery
from .index import Index
from .models import MODEL_CODES, ModelParams, get_scorer
from .text import QueryBag, build_query_bag
from .trec_io import RunEntry, Topic, write_run

DEFAULT_K = 1000


@dataclass
class RankedList:
    """Retrieved documents for one topic, best first.

    Ordered by score descending, ties by docno descending.
    """

    num: str
    items: list[tuple[str, float]] = field(default_factory=list)

    def __len__(self):
        return len(self.items)

    def docnos(self) -> list[str]:
        return [d for d, _ in self.items]


@dataclass
class RunFile:
    tag: str
    lists: list[RankedList] = field(default_factory=list)

    def entries(self) -> list[RunEntry]:
        return [
            RunEntry(rl.num, docno, rank, score, self.tag)
            for rl in self.lists
            for rank, (docno, score) in enumerate(rl.items, 1)
        ]

    def to_bytes(self) -> bytes:
        return write_run(self.entries())

    def topics(self) -> list[str]:
        return [rl.num for rl in self.lists]

    @classmethod
    def from_entries(cls, entries: Iterable[RunEntry], tag: str | None = None) -> "RunFile":
        """Group entries by topic (first-seen order) and re-sort each list canonically.

        Stored ranks are ignored.  A docno repeated within a topic is an error.
        """
        groups: dict[str, dict[str, float]] = {}
        seen_tag = tag
        for e in entries:
            seen_tag = seen_tag or e.tag
            docs = groups.setdefault(e.num, {})
            if e.docno in docs:
                raise ValueError(f"topic {e.num}: docno {e.docno} retrieved twice")
            docs[e.docno] = e.score
        lists = [RankedList(num, canonical_order(docs.items())) for num, docs in groups.items()]
        return cls(seen_tag or "", lists)


def canonical_order(items: Iterable[tuple[str, float]]) -> list[tuple[str, float]]:
    """Sort (docno, score) pairs by score descending, then docno descending."""
    return sorted(items, key=lambda x: (x[1], x[0]), reverse=True)


def run_query(
    index: Index,
    model: str,
    params: ModelParams | None,
    bag: QueryBag,
    k: int = DEFAULT_K,
    num: str = "",
) -> RankedList:
    """Score every document containing a query term and keep the top ``k``.

    A document's score is the sum over the query terms it contains, taken in
    sorted term order, of the model's per-term score.  Query terms missing
    from the vocabulary are skipped.
    """
    get_scorer(model)  # raises UnknownModelError
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not bag.terms:
        raise EmptyQuery(f"topic {num}: empty query")
    params = params or ModelParams()
    present = [(t, q) for t, q in bag.sorted_terms() if t in index.term_ids]
    if not present:
        return RankedList(num, [])
    ids = np.array([index.term_ids[t] for t, _ in present], dtype=np.int64)
    starts = index.offsets[ids]
    ends = index.offsets[ids + 1]
    st = index.stats
    docs, scores = kernels.daat_topk(
        MODEL_CODES[model],
        params.as_tuple(),
        index.post_docids,
        index.post_tfs,
        np.ascontiguousarray(starts, dtype=np.int64),
        np.ascontiguousarray(ends, dtype=np.int64),
        np.array([float(q) for _, q in present]),
        index.df[ids].astype(np.float64),
        index.cf[ids].astype(np.float64),
        index.doc_lengths,
        index.docno_rank,
        float(st.num_docs),
        float(st.total_tokens),
        st.avg_doc_len,
        int(k),
    )
    # score descending, then docno descending (higher docno_rank first)
    order = np.lexsort((-index.docno_rank[docs], -scores))
    docnos = index.docnos
    items = [(docnos[d], float(s)) for d, s in zip(docs[order].tolist(), scores[order].tolist())]
    return RankedList(num, items)


def run_topics(
    index: Index,
    model: str,
    params: ModelParams | None,
    topics: Sequence[Topic],
    field_mode: str,
    k: int = DEFAULT_K,
    tag: str = "gir",
) -> RunFile:
    """Run every topic; a topic with no query terms yields an empty list."""
    get_scorer(model)
    lists = []
    for topic in topics:
        try:
            bag = build_query_bag(topic, field_mode, index.analyzer)
        except EmptyQuery:
            lists.append(RankedList(topic.num, []))
            continue
        lists.append(run_query(index, model, params, bag, k, num=topic.num))
    return RunFile(tag, lists)
