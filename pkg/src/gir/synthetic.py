"""Synthetic test collections with Gujarati-script vocabulary.

Word frequencies follow a Zipf law.  Each topic owns a handful of theme terms
that are planted in its relevant documents, so the qrels are learnable and
the weighting models produce non-trivial rankings.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trec_io import Qrels, RawDocument, Topic, serialize_documents, write_qrels

# consonants U+0A95..U+0AB9 (minus unassigned) and dependent vowel signs
_CONSONANTS = [chr(c) for c in range(0x0A95, 0x0AB9 + 1) if c not in (0x0AA9, 0x0AB1, 0x0AB4)]
_MATRAS = ["", "ા", "િ", "ી", "ુ", "ૂ", "ે", "ૈ", "ો", "ૌ", "ં"]
_VIRAMA = "્"


@dataclass
class SyntheticCollection:
    docs: list[RawDocument]
    topics: list[Topic]
    qrels: Qrels
    vocabulary: list[str]


def make_vocabulary(size: int, rng: np.random.Generator) -> list[str]:
    words: list[str] = []
    seen: set[str] = set()
    while len(words) < size:
        nsyl = int(rng.integers(1, 5))
        parts = []
        for _ in range(nsyl):
            parts.append(_CONSONANTS[int(rng.integers(len(_CONSONANTS)))])
            if rng.random() < 0.1:
                parts.append(_VIRAMA + _CONSONANTS[int(rng.integers(len(_CONSONANTS)))])
            parts.append(_MATRAS[int(rng.integers(len(_MATRAS)))])
        w = "".join(parts)
        if w not in seen:
            seen.add(w)
            words.append(w)
    return words


def _topic_text(terms: list[str], filler: list[str], rng, n_theme: int, n_fill: int) -> str:
    chosen = list(rng.choice(terms, size=min(n_theme, len(terms)), replace=False))
    chosen += list(rng.choice(filler, size=n_fill))
    rng.shuffle(chosen)
    return " ".join(chosen)


def generate(
    num_docs: int = 10_000,
    num_topics: int = 25,
    vocab_size: int = 20_000,
    avg_len: float = 100.0,
    zipf_exponent: float = 1.0,
    seed: int = 0,
) -> SyntheticCollection:
    rng = np.random.default_rng(seed)
    vocab = make_vocabulary(vocab_size, rng)
    ranks = np.arange(1, vocab_size + 1, dtype=np.float64)
    probs = ranks ** -zipf_exponent
    probs /= probs.sum()
    lengths = np.maximum(1, rng.poisson(avg_len, size=num_docs))
    tokens = rng.choice(vocab_size, size=int(lengths.sum()), p=probs)
    bounds = np.concatenate([[0], np.cumsum(lengths)])

    # mid-frequency theme terms, disjoint across topics
    pool = rng.permutation(np.arange(100, min(vocab_size, 5000)))
    theme_size = 6
    themes = [pool[i * theme_size:(i + 1) * theme_size] for i in range(num_topics)]
    relevant: list[np.ndarray] = []
    for j in range(num_topics):
        n_rel = int(rng.integers(5, 40))
        rel = rng.choice(num_docs, size=n_rel, replace=False)
        relevant.append(rel)
        for d in rel:
            lo, hi = bounds[d], bounds[d + 1]
            n_plant = max(1, int(rng.integers(1, 4 + (hi - lo) // 15)))
            pos = rng.integers(lo, hi, size=n_plant)
            tokens[pos] = rng.choice(themes[j], size=n_plant)

    docnos = [f"gs{i:06d}" for i in range(num_docs)]
    docs = [
        RawDocument(docnos[i], " ".join(vocab[t] for t in tokens[bounds[i]:bounds[i + 1]]))
        for i in range(num_docs)
    ]

    common = vocab[:300]
    topics = []
    judgments: dict[str, dict[str, int]] = {}
    for j in range(num_topics):
        theme = [vocab[t] for t in themes[j]]
        num = str(101 + j)
        title = _topic_text(theme, common, rng, 2, 0)
        desc = _topic_text(theme, common, rng, 3, 5) + "."
        narr = _topic_text(theme, common, rng, 5, 20) + "."
        topics.append(Topic(num, title, desc, narr))
        grades = {docnos[d]: int(rng.integers(1, 3)) for d in relevant[j]}
        # judged non-relevant: a pool of documents sharing a theme term
        theme_set = set(int(t) for t in themes[j])
        candidates = [
            d for d in rng.choice(num_docs, size=min(num_docs, 2000), replace=False)
            if docnos[d] not in grades
            and theme_set.intersection(tokens[bounds[d]:bounds[d + 1]].tolist())
        ]
        for d in candidates[:60]:
            grades[docnos[d]] = 0
        judgments[num] = grades
    return SyntheticCollection(docs, topics, Qrels(judgments), vocab)


def write_topics(topics: list[Topic]) -> bytes:
    out = []
    for t in topics:
        out.append(
            f"<top>\n<num>{t.num}</num>\n<title>{t.title}</title>\n"
            f"<desc>{t.desc}</desc>\n<narr>{t.narr}</narr>\n</top>\n\n"
        )
    return "".join(out).encode("utf-8")


def write_collection(coll: SyntheticCollection, out: str | Path, files: int = 4) -> dict[str, Path]:
    """Write ``docs/part-*.sgml``, ``topics.txt`` and ``qrels.txt`` under ``out``."""
    root = Path(out)
    docdir = root / "docs"
    docdir.mkdir(parents=True, exist_ok=True)
    per = -(-len(coll.docs) // files)
    for i in range(files):
        chunk = coll.docs[i * per:(i + 1) * per]
        if chunk:
            (docdir / f"part-{i:03d}.sgml").write_bytes(serialize_documents(chunk))
    (root / "topics.txt").write_bytes(write_topics(coll.topics))
    (root / "qrels.txt").write_bytes(write_qrels(coll.qrels))
    return {"collection": docdir, "topics": root / "topics.txt", "qrels": root / "qrels.txt"}
