"""Inverted index: build, persist, and serve postings and collection statistics.

Building tokenises documents (optionally in worker processes), accumulates
postings in memory for ``segment_docs`` documents at a time, spills each batch
to a temporary segment file and merges the segments at the end.  docIds are
dense and follow ingestion order, so the merged index does not depend on the
batch size or worker count.

On disk an index is a directory of checksummed binary segments plus a
plain-text ``stats.txt`` summary.
"""

from __future__ import annotations

import heapq
import os
import struct
import tempfile
import zlib
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from itertools import islice
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from ._backend import kernels
from .errors import (
    ChecksumError,
    DuplicateDocnoError,
    IndexBuildError,
    IndexFormatError,
    IndexVersionError,
    MissingIndexError,
    TruncatedIndexError,
)
from .text import DEFAULT_ANALYZER, Analyzer
from .trec_io import RawDocument

FORMAT_VERSION = 1
MAGIC = b"GIRIDX"
_HEADER = struct.Struct("<6sH4sQI")  # magic, version, kind, payload length, crc32

DEFAULT_SEGMENT_DOCS = 50_000


@dataclass(frozen=True)
class CollectionStats:
    num_docs: int
    total_tokens: int
    vocab_size: int

    @property
    def avg_doc_len(self) -> float:
        return self.total_tokens / self.num_docs

    def summary(self) -> str:
        return (
            f"N={self.num_docs} TC={self.total_tokens} "
            f"avg_l={self.avg_doc_len:.4g} vocab={self.vocab_size}"
        )


@dataclass(frozen=True)
class TermStats:
    df: int
    cf: int


class PostingList:
    """(docId, tf) pairs sorted by docId; thin view over two int32 arrays."""

    __slots__ = ("docids", "tfs")

    def __init__(self, docids: np.ndarray, tfs: np.ndarray):
        self.docids = docids
        self.tfs = tfs

    def __len__(self):
        return len(self.docids)

    def __iter__(self):
        return zip(self.docids.tolist(), self.tfs.tolist())

    @property
    def entries(self) -> list[tuple[int, int]]:
        return list(self)

    def __eq__(self, other):
        if isinstance(other, PostingList):
            return np.array_equal(self.docids, other.docids) and np.array_equal(self.tfs, other.tfs)
        return NotImplemented

    def __repr__(self):
        return f"PostingList({self.entries!r})"


class Index:
    """Immutable in-memory inverted index.

    Terms are kept in sorted order; the postings of term ``i`` occupy
    ``post_docids[offsets[i]:offsets[i+1]]``.
    """

    def __init__(self, terms, df, cf, offsets, post_docids, post_tfs, docnos, doc_lengths,
                 analyzer: Analyzer = DEFAULT_ANALYZER):
        self.terms: list[str] = list(terms)
        self.term_ids = {t: i for i, t in enumerate(self.terms)}
        self.df = np.asarray(df, dtype=np.int64)
        self.cf = np.asarray(cf, dtype=np.int64)
        self.offsets = np.asarray(offsets, dtype=np.int64)
        self.post_docids = np.ascontiguousarray(post_docids, dtype=np.int32)
        self.post_tfs = np.ascontiguousarray(post_tfs, dtype=np.int32)
        self.docnos: list[str] = list(docnos)
        self.doc_lengths = np.ascontiguousarray(doc_lengths, dtype=np.int32)
        self.analyzer = analyzer
        self.docno_ids = {d: i for i, d in enumerate(self.docnos)}
        # position of each docno in lexicographic order; used for tie-breaking
        order = sorted(range(len(self.docnos)), key=self.docnos.__getitem__)
        rank = np.empty(len(self.docnos), dtype=np.int32)
        rank[order] = np.arange(len(self.docnos), dtype=np.int32)
        self.docno_rank = rank
        self._stats = CollectionStats(
            num_docs=len(self.docnos),
            total_tokens=int(self.doc_lengths.sum(dtype=np.int64)),
            vocab_size=len(self.terms),
        )

    @property
    def stats(self) -> CollectionStats:
        return self._stats

    def __contains__(self, term: str) -> bool:
        return term in self.term_ids

    def postings(self, term: str) -> tuple[TermStats, PostingList] | None:
        i = self.term_ids.get(term)
        if i is None:
            return None
        lo, hi = self.offsets[i], self.offsets[i + 1]
        return (
            TermStats(int(self.df[i]), int(self.cf[i])),
            PostingList(self.post_docids[lo:hi], self.post_tfs[lo:hi]),
        )

    def term_stats(self, term: str) -> TermStats | None:
        i = self.term_ids.get(term)
        if i is None:
            return None
        return TermStats(int(self.df[i]), int(self.cf[i]))

    def doc_length(self, docno: str) -> int:
        return int(self.doc_lengths[self.docno_ids[docno]])

    def check(self) -> None:
        """Verify the structural invariants; raise IndexFormatError if broken."""
        nterms = len(self.terms)
        n = len(self.docnos)
        if len(self.df) != nterms or len(self.cf) != nterms or len(self.offsets) != nterms + 1:
            raise IndexFormatError("term table sizes disagree")
        if self.offsets[0] != 0 or self.offsets[-1] != len(self.post_docids):
            raise IndexFormatError("posting offsets do not cover the postings")
        if len(self.post_tfs) != len(self.post_docids):
            raise IndexFormatError("postings arrays differ in length")
        if not np.array_equal(np.diff(self.offsets), self.df):
            raise IndexFormatError("df differs from posting list length")
        if nterms and (self.df.min() < 1):
            raise IndexFormatError("empty posting list")
        if len(self.post_tfs):
            if self.post_tfs.min() < 1:
                raise IndexFormatError("non-positive tf")
            if self.post_docids.min() < 0 or self.post_docids.max() >= n:
                raise IndexFormatError("docId out of range")
            sums = np.add.reduceat(self.post_tfs.astype(np.int64), self.offsets[:-1])
            if not np.array_equal(sums, self.cf):
                raise IndexFormatError("collection frequency differs from sum of tf")
            steps = np.diff(self.post_docids.astype(np.int64))
            starts = np.zeros(len(self.post_docids), dtype=bool)
            starts[self.offsets[:-1]] = True
            if np.any(steps[~starts[1:]] <= 0):
                raise IndexFormatError("docIds not strictly increasing within a posting list")
        if int(self.cf.sum()) != self._stats.total_tokens:
            raise IndexFormatError("sum of collection frequencies differs from total tokens")
        if self.terms != sorted(self.terms) or len(set(self.terms)) != nterms:
            raise IndexFormatError("lexicon not sorted and unique")
        if len(self.docno_ids) != n:
            raise IndexFormatError("duplicate docno")

    def same_content(self, other: "Index") -> bool:
        return (
            self.terms == other.terms
            and self.docnos == other.docnos
            and self.analyzer == other.analyzer
            and np.array_equal(self.df, other.df)
            and np.array_equal(self.cf, other.cf)
            and np.array_equal(self.offsets, other.offsets)
            and np.array_equal(self.post_docids, other.post_docids)
            and np.array_equal(self.post_tfs, other.post_tfs)
            and np.array_equal(self.doc_lengths, other.doc_lengths)
        )


def stats(index: Index) -> CollectionStats:
    return index.stats


def postings(index: Index, term: str):
    return index.postings(term)


# -- building ----------------------------------------------------------------

_worker_analyzer: Analyzer = DEFAULT_ANALYZER


def _init_worker(analyzer: Analyzer) -> None:
    global _worker_analyzer
    _worker_analyzer = analyzer


def _count_terms(text: str) -> tuple[int, list[tuple[str, int]]]:
    tokens = _worker_analyzer.analyze(text)
    return len(tokens), list(Counter(tokens).items())


def _batches(it: Iterator, size: int) -> Iterator[list]:
    while True:
        batch = list(islice(it, size))
        if not batch:
            return
        yield batch


class _SegmentWriter:
    """Spill one batch of postings, terms sorted, to a temp file."""

    def __init__(self, path: Path):
        self.path = path

    def write(self, postings: dict[str, tuple[list[int], list[int]]]) -> None:
        terms = sorted(postings)
        offsets = [0]
        docids: list[int] = []
        tfs: list[int] = []
        for t in terms:
            d, f = postings[t]
            docids.extend(d)
            tfs.extend(f)
            offsets.append(len(docids))
        off = np.array(offsets, dtype=np.int64)
        blob = kernels.encode_postings(
            np.array(docids, dtype=np.int32), np.array(tfs, dtype=np.int32), off
        )
        lex = "\n".join(terms).encode("utf-8")
        with open(self.path, "wb") as fh:
            fh.write(struct.pack("<QQQ", len(terms), len(lex), len(blob)))
            fh.write(lex)
            fh.write(off.tobytes())
            fh.write(blob)


def _read_segment(path: Path) -> Iterator[tuple[str, np.ndarray, np.ndarray]]:
    with open(path, "rb") as fh:
        nterms, nlex, nblob = struct.unpack("<QQQ", fh.read(24))
        lex = fh.read(nlex).decode("utf-8")
        off = np.frombuffer(fh.read(8 * (nterms + 1)), dtype=np.int64)
        blob = fh.read(nblob)
    terms = lex.split("\n") if nterms else []
    docids, tfs = kernels.decode_postings(blob, off)
    for i, t in enumerate(terms):
        yield t, docids[off[i]:off[i + 1]], tfs[off[i]:off[i + 1]]


def build_index(
    docs: Iterable[RawDocument],
    analyzer: Analyzer = DEFAULT_ANALYZER,
    *,
    workers: int = 1,
    segment_docs: int = DEFAULT_SEGMENT_DOCS,
    tmpdir: str | os.PathLike | None = None,
) -> Index:
    """Index ``docs`` in order.  Empty documents are kept with length 0.

    Raises :class:`DuplicateDocnoError` for repeated docnos and
    :class:`IndexBuildError` when there are no documents.
    """
    if segment_docs < 1:
        raise ValueError("segment_docs must be >= 1")
    docnos: list[str] = []
    seen: set[str] = set()
    lengths: list[int] = []
    pool = None
    if workers > 1:
        pool = ProcessPoolExecutor(max_workers=workers, initializer=_init_worker, initargs=(analyzer,))
    else:
        _init_worker(analyzer)
    try:
        with tempfile.TemporaryDirectory(prefix="gir-build-", dir=tmpdir) as tmp:
            segments: list[Path] = []
            for batch in _batches(iter(docs), segment_docs):
                for doc in batch:
                    if doc.docno in seen:
                        raise DuplicateDocnoError("duplicate docno", context=f"docno {doc.docno}")
                    seen.add(doc.docno)
                texts = [doc.text for doc in batch]
                if pool is not None:
                    counted = pool.map(_count_terms, texts, chunksize=max(1, len(texts) // (4 * workers)))
                else:
                    counted = map(_count_terms, texts)
                acc: dict[str, tuple[list[int], list[int]]] = {}
                base = len(docnos)
                for j, (length, counts) in enumerate(counted):
                    docid = base + j
                    lengths.append(length)
                    for term, tf in counts:
                        entry = acc.get(term)
                        if entry is None:
                            acc[term] = ([docid], [tf])
                        else:
                            entry[0].append(docid)
                            entry[1].append(tf)
                docnos.extend(doc.docno for doc in batch)
                seg = Path(tmp) / f"seg{len(segments):05d}"
                _SegmentWriter(seg).write(acc)
                segments.append(seg)
            if not docnos:
                raise IndexBuildError("cannot build an index from zero documents")
            index = _merge_segments(segments, docnos, lengths, analyzer)
    finally:
        if pool is not None:
            pool.shutdown()
    index.check()
    return index


def _merge_segments(segments, docnos, lengths, analyzer) -> Index:
    # segments hold increasing docId ranges, so per-term concatenation in
    # segment order keeps postings sorted; heapq.merge is stable across inputs
    merged = heapq.merge(*(_read_segment(s) for s in segments), key=lambda rec: rec[0])
    terms: list[str] = []
    df: list[int] = []
    cf: list[int] = []
    parts_d: list[np.ndarray] = []
    parts_t: list[np.ndarray] = []
    for term, d, t in merged:
        if terms and terms[-1] == term:
            df[-1] += len(d)
            cf[-1] += int(t.sum(dtype=np.int64))
        else:
            terms.append(term)
            df.append(len(d))
            cf.append(int(t.sum(dtype=np.int64)))
        parts_d.append(d)
        parts_t.append(t)
    offsets = np.zeros(len(terms) + 1, dtype=np.int64)
    np.cumsum(df, out=offsets[1:])
    post_d = np.concatenate(parts_d) if parts_d else np.empty(0, dtype=np.int32)
    post_t = np.concatenate(parts_t) if parts_t else np.empty(0, dtype=np.int32)
    return Index(terms, df, cf, offsets, post_d, post_t, docnos, lengths, analyzer)


# -- persistence -------------------------------------------------------------

FILES = {
    "docs": ("docs.gir", b"DOCS"),
    "lexicon": ("lexicon.gir", b"LEXI"),
    "postings": ("postings.gir", b"POST"),
    "analyzer": ("analyzer.gir", b"ANLZ"),
}
STATS_FILE = "stats.txt"


def _write_segment(path: Path, kind: bytes, payload: bytes) -> None:
    crc = zlib.crc32(kind + struct.pack("<Q", len(payload)) + payload)
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, FORMAT_VERSION, kind, len(payload), crc))
        fh.write(payload)
    os.replace(tmp, path)


def _read_segment_file(path: Path, kind: bytes) -> bytes:
    try:
        raw = path.read_bytes()
    except FileNotFoundError:
        raise MissingIndexError(f"index file missing: {path}") from None
    if len(raw) < _HEADER.size:
        raise TruncatedIndexError(f"{path}: file shorter than its header")
    magic, version, got_kind, length, crc = _HEADER.unpack_from(raw)
    if magic != MAGIC:
        raise IndexFormatError(f"{path}: not a gir index file")
    if version != FORMAT_VERSION:
        raise IndexVersionError(f"{path}: format version {version}, expected {FORMAT_VERSION}")
    payload = raw[_HEADER.size:]
    if len(payload) < length:
        raise TruncatedIndexError(f"{path}: {len(payload)} of {length} payload bytes present")
    if len(payload) > length or got_kind != kind:
        raise ChecksumError(f"{path}: segment header does not match its content")
    if zlib.crc32(got_kind + struct.pack("<Q", length) + payload) != crc:
        raise ChecksumError(f"{path}: checksum mismatch")
    return payload


def _encode_strings(items: list[str]) -> bytes:
    return "\n".join(items).encode("utf-8")


def _decode_strings(blob: bytes, count: int) -> list[str]:
    if count == 0:
        return []
    items = blob.decode("utf-8").split("\n")
    if len(items) != count:
        raise IndexFormatError(f"expected {count} strings, found {len(items)}")
    return items


def save_index(index: Index, path: str | os.PathLike) -> None:
    """Write ``index`` into directory ``path`` (created if needed)."""
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    n = len(index.docnos)
    docs = struct.pack("<Q", n) + index.doc_lengths.astype("<i4").tobytes() + _encode_strings(index.docnos)
    nterms = len(index.terms)
    lex = (
        struct.pack("<Q", nterms)
        + index.df.astype("<i8").tobytes()
        + index.cf.astype("<i8").tobytes()
        + _encode_strings(index.terms)
    )
    blob = kernels.encode_postings(index.post_docids, index.post_tfs, index.offsets)
    stop = sorted(index.analyzer.stopwords)
    anlz = struct.pack("<Q", len(stop)) + _encode_strings(stop)
    for key, payload in (("docs", docs), ("lexicon", lex), ("postings", blob), ("analyzer", anlz)):
        name, kind = FILES[key]
        _write_segment(out / name, kind, payload)
    s = index.stats
    summary = (
        f"format_version={FORMAT_VERSION}\n"
        f"num_docs={s.num_docs}\n"
        f"total_tokens={s.total_tokens}\n"
        f"avg_doc_len={s.avg_doc_len!r}\n"
        f"vocab_size={s.vocab_size}\n"
        f"stopwords={len(stop)}\n"
    )
    (out / STATS_FILE).write_text(summary, encoding="utf-8")


def load_index(path: str | os.PathLike) -> Index:
    """Load an index written by :func:`save_index`.

    Raises MissingIndexError, IndexVersionError, TruncatedIndexError or
    ChecksumError as appropriate.
    """
    root = Path(path)
    if not root.is_dir():
        raise MissingIndexError(f"no index directory at {root}")
    payloads = {key: _read_segment_file(root / name, kind) for key, (name, kind) in FILES.items()}
    try:
        docs = payloads["docs"]
        (n,) = struct.unpack_from("<Q", docs)
        lengths = np.frombuffer(docs, dtype="<i4", count=n, offset=8)
        docnos = _decode_strings(docs[8 + 4 * n:], n)

        lex = payloads["lexicon"]
        (nterms,) = struct.unpack_from("<Q", lex)
        df = np.frombuffer(lex, dtype="<i8", count=nterms, offset=8)
        cf = np.frombuffer(lex, dtype="<i8", count=nterms, offset=8 + 8 * nterms)
        terms = _decode_strings(lex[8 + 16 * nterms:], nterms)

        offsets = np.zeros(nterms + 1, dtype=np.int64)
        np.cumsum(df, out=offsets[1:])
        post_d, post_t = kernels.decode_postings(payloads["postings"], offsets)

        anlz = payloads["analyzer"]
        (nstop,) = struct.unpack_from("<Q", anlz)
        stop = _decode_strings(anlz[8:], nstop)
    except (struct.error, ValueError, UnicodeDecodeError) as exc:
        raise IndexFormatError(f"{root}: corrupt index ({exc})") from None
    index = Index(terms, df, cf, offsets, post_d, post_t, docnos, lengths.astype(np.int32),
                  Analyzer(frozenset(stop)))
    index.check()
    return index


def read_stats_file(path: str | os.PathLike) -> dict[str, str]:
    """Parse the ``key=value`` summary written next to the segments."""
    out = {}
    for line in (Path(path) / STATS_FILE).read_text(encoding="utf-8").splitlines():
        if "=" in line:
            k, v = line.split("=", 1)
            out[k.strip()] = v.strip()
    return out
