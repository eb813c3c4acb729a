"""Readers and writers for the TREC exchange formats.

Documents and topics use a flat SGML-lite markup: tags are matched
case-sensitively, attributes and entities are not interpreted.  Qrels and
run files are whitespace-separated lines.  Everything is strict UTF-8.
"""

from __future__ import annotations

import math
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Iterable, Iterator, Union

from .errors import DuplicateDocnoError, ParseError, RunFormatError

Source = Union[bytes, bytearray, memoryview, str, BinaryIO]


@dataclass(frozen=True)
class RawDocument:
    docno: str
    text: str


@dataclass(frozen=True)
class Topic:
    num: str
    title: str
    desc: str = ""
    narr: str = ""


@dataclass(frozen=True)
class RunEntry:
    num: str
    docno: str
    rank: int
    score: float
    tag: str


class Qrels:
    """Relevance judgments: topic -> docno -> grade.  Relevant means grade > 0."""

    def __init__(self, judgments: dict[str, dict[str, int]] | None = None):
        self.judgments: dict[str, dict[str, int]] = judgments or {}

    def __eq__(self, other):
        return isinstance(other, Qrels) and self.judgments == other.judgments

    def __repr__(self):
        return f"Qrels({self.judgments!r})"

    def __len__(self):
        return len(self.judgments)

    def __contains__(self, num):
        return num in self.judgments

    def topics(self) -> list[str]:
        return list(self.judgments)

    def grades(self, num: str) -> dict[str, int]:
        return self.judgments.get(num, {})

    def is_relevant(self, num: str, docno: str) -> bool:
        return self.judgments.get(num, {}).get(docno, 0) > 0

    def relevant(self, num: str) -> set[str]:
        return {d for d, g in self.grades(num).items() if g > 0}

    def nonrelevant(self, num: str) -> set[str]:
        """Judged non-relevant documents (grade 0)."""
        return {d for d, g in self.grades(num).items() if g == 0}

    def num_relevant(self, num: str) -> int:
        return sum(1 for g in self.grades(num).values() if g > 0)


def _read(source: Source) -> bytes:
    if isinstance(source, (bytes, bytearray, memoryview)):
        return bytes(source)
    if isinstance(source, str):
        return source.encode("utf-8")
    data = source.read()
    if isinstance(data, str):
        return data.encode("utf-8")
    return data


def _check_utf8(data: bytes) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError("invalid UTF-8", offset=exc.start) from None


_NONSPACE = re.compile(rb"\S")


def _first_nonspace(data: bytes, start: int, end: int) -> int | None:
    m = _NONSPACE.search(data, start, end)
    return m.start() if m else None


# -- documents ---------------------------------------------------------------

_DOC_OPEN, _DOC_CLOSE = b"<DOC>", b"</DOC>"
_DOCNO_OPEN, _DOCNO_CLOSE = b"<DOCNO>", b"</DOCNO>"
_TEXT_OPEN, _TEXT_CLOSE = b"<TEXT>", b"</TEXT>"


def iter_documents(source: Source) -> Iterator[RawDocument]:
    """Yield documents in stream order.  See :func:`parse_documents`."""
    data = _read(source)
    _check_utf8(data)
    seen: set[str] = set()
    pos = 0
    n = len(data)
    while pos < n:
        start = data.find(_DOC_OPEN, pos)
        stray = _first_nonspace(data, pos, n if start < 0 else start)
        if stray is not None:
            raise ParseError("unexpected content outside <DOC>", offset=stray)
        if start < 0:
            break
        body_start = start + len(_DOC_OPEN)
        end = data.find(_DOC_CLOSE, body_start)
        nested = data.find(_DOC_OPEN, body_start)
        if end < 0:
            raise ParseError("missing </DOC>", offset=start,
                             context=_docno_hint(data, body_start, nested))
        if 0 <= nested < end:
            raise ParseError("nested <DOC>", offset=nested,
                             context=_docno_hint(data, body_start, nested))
        doc = _parse_doc_body(data, body_start, end, start)
        if doc.docno in seen:
            raise DuplicateDocnoError("duplicate docno", offset=start, context=f"docno {doc.docno}")
        seen.add(doc.docno)
        yield doc
        pos = end + len(_DOC_CLOSE)


def _docno_hint(data: bytes, start: int, end: int) -> str | None:
    end = len(data) if end < 0 else end
    i = data.find(_DOCNO_OPEN, start, end)
    j = data.find(_DOCNO_CLOSE, i + 1, end) if i >= 0 else -1
    if i >= 0 and j >= 0:
        return "docno " + data[i + len(_DOCNO_OPEN):j].decode("utf-8").strip()
    return None


def _parse_doc_body(data: bytes, start: int, end: int, doc_offset: int) -> RawDocument:
    i = data.find(_DOCNO_OPEN, start, end)
    if i < 0:
        raise ParseError("missing <DOCNO>", offset=doc_offset)
    j = data.find(_DOCNO_CLOSE, i, end)
    if j < 0:
        raise ParseError("missing </DOCNO>", offset=i)
    docno = data[i + len(_DOCNO_OPEN):j].decode("utf-8").strip()
    if not docno:
        raise ParseError("empty <DOCNO>", offset=i)
    if any(ch.isspace() for ch in docno):
        raise ParseError("whitespace inside docno", offset=i, context=f"docno {docno}")
    if data.find(_DOCNO_OPEN, j, end) >= 0:
        raise ParseError("more than one <DOCNO>", offset=j, context=f"docno {docno}")
    texts = []
    pos = start
    while True:
        t = data.find(_TEXT_OPEN, pos, end)
        if t < 0:
            break
        u = data.find(_TEXT_CLOSE, t, end)
        if u < 0:
            raise ParseError("missing </TEXT>", offset=t, context=f"docno {docno}")
        texts.append(data[t + len(_TEXT_OPEN):u].decode("utf-8"))
        pos = u + len(_TEXT_CLOSE)
    return RawDocument(docno, "\n".join(texts))


def parse_documents(source: Source) -> list[RawDocument]:
    """Parse ``<DOC>`` blocks into :class:`RawDocument` objects.

    The docno is whitespace-trimmed; the text is the raw content between
    ``<TEXT>`` and ``</TEXT>`` (several TEXT blocks are joined by newlines,
    a missing one gives empty text).  Malformed nesting, missing tags,
    duplicate docnos and invalid UTF-8 raise :class:`ParseError` with the
    byte offset.
    """
    return list(iter_documents(source))


def serialize_documents(docs: Iterable[RawDocument]) -> bytes:
    parts = []
    for doc in docs:
        if "</TEXT>" in doc.text:
            raise ValueError(f"document {doc.docno} text contains </TEXT>")
        part = f"<DOC>\n<DOCNO>{doc.docno}</DOCNO>\n<TEXT>{doc.text}</TEXT>\n</DOC>\n"
        try:
            parts.append(part.encode("utf-8"))
        except UnicodeEncodeError as exc:
            raise ValueError(f"document {doc.docno} is not encodable as UTF-8: {exc.reason}") from None
    return b"".join(parts)


def collection_files(path: str | os.PathLike) -> list[Path]:
    """Files making up a collection: the path itself, or every regular file
    below a directory (hidden files skipped), in sorted path order."""
    p = Path(path)
    if p.is_file():
        return [p]
    if not p.is_dir():
        raise FileNotFoundError(f"no such collection: {p}")
    return sorted(
        f for f in p.rglob("*")
        if f.is_file() and not any(part.startswith(".") for part in f.relative_to(p).parts)
    )


def read_collection(path: str | os.PathLike) -> Iterator[RawDocument]:
    """Documents of every collection file; docnos must be unique across files."""
    seen: set[str] = set()
    for f in collection_files(path):
        try:
            for doc in iter_documents(f.read_bytes()):
                if doc.docno in seen:
                    raise DuplicateDocnoError("duplicate docno", context=f"docno {doc.docno}")
                seen.add(doc.docno)
                yield doc
        except ParseError as exc:
            raise ParseError(f"{f}: {exc}") from exc


# -- topics ------------------------------------------------------------------

_TOP_OPEN, _TOP_CLOSE = b"<top>", b"</top>"
_FIELD_TAG = re.compile(rb"<(/?)(num|title|desc|narr)>")
_ANY_TAG = re.compile(rb"</?[A-Za-z][A-Za-z0-9_-]*>")
_LABELS = {
    "num": re.compile(r"^Number:\s*", re.I),
    "desc": re.compile(r"^Description:\s*", re.I),
    "narr": re.compile(r"^Narrative:\s*", re.I),
}


def parse_topics(source: Source) -> list[Topic]:
    """Parse ``<top>`` blocks.

    Closing field tags are optional: a field runs to the next tag.  Missing
    ``<num>`` or ``<title>`` is an error; missing ``<desc>``/``<narr>`` gives
    an empty string.  Leading TREC labels such as ``Number:`` are dropped.
    """
    data = _read(source)
    _check_utf8(data)
    topics: list[Topic] = []
    seen: set[str] = set()
    pos = 0
    n = len(data)
    while pos < n:
        start = data.find(_TOP_OPEN, pos)
        if start < 0:
            break
        body = start + len(_TOP_OPEN)
        end = data.find(_TOP_CLOSE, body)
        nested = data.find(_TOP_OPEN, body)
        if end < 0:
            raise ParseError("missing </top>", offset=start)
        if 0 <= nested < end:
            raise ParseError("nested <top>", offset=nested)
        fields = _topic_fields(data, body, end)
        if not fields.get("num"):
            raise ParseError("topic without <num>", offset=start)
        if not fields.get("title"):
            raise ParseError("topic without <title>", offset=start, context=f"num {fields['num']}")
        num = fields["num"]
        if num in seen:
            raise ParseError("duplicate topic", offset=start, context=f"num {num}")
        seen.add(num)
        topics.append(Topic(num, fields["title"], fields.get("desc", ""), fields.get("narr", "")))
        pos = end + len(_TOP_CLOSE)
    return topics


def _topic_fields(data: bytes, start: int, end: int) -> dict[str, str]:
    fields: dict[str, str] = {}
    for m in _FIELD_TAG.finditer(data, start, end):
        if m.group(1):
            continue
        name = m.group(2).decode()
        if name in fields:
            raise ParseError(f"duplicate <{name}>", offset=m.start())
        nxt = _ANY_TAG.search(data, m.end(), end)
        stop = nxt.start() if nxt else end
        value = data[m.end():stop].decode("utf-8").strip()
        if name in _LABELS:
            value = _LABELS[name].sub("", value)
        fields[name] = value
    return fields


# -- qrels -------------------------------------------------------------------

def parse_qrels(source: Source) -> Qrels:
    """Parse ``num iteration docno grade`` lines; the iteration column is ignored."""
    text = _check_utf8(_read(source))
    judgments: dict[str, dict[str, int]] = {}
    for lineno, line in enumerate(text.split("\n"), 1):
        cols = line.split()
        if not cols:
            continue
        if len(cols) != 4:
            raise ParseError(f"expected 4 columns, got {len(cols)}", line=lineno)
        num, _, docno, grade_s = cols
        try:
            grade = int(grade_s)
        except ValueError:
            raise ParseError(f"non-integer grade {grade_s!r}", line=lineno) from None
        if grade < 0:
            raise ParseError(f"negative grade {grade}", line=lineno)
        topic = judgments.setdefault(num, {})
        old = topic.get(docno)
        if old is not None and old != grade:
            raise ParseError("conflicting grades", line=lineno, context=f"{num} {docno}: {old} vs {grade}")
        topic[docno] = grade
    return Qrels(judgments)


def write_qrels(qrels: Qrels) -> bytes:
    lines = [
        f"{num} 0 {docno} {grade}\n"
        for num, grades in qrels.judgments.items()
        for docno, grade in grades.items()
    ]
    return "".join(lines).encode("utf-8")


# -- runs --------------------------------------------------------------------

def format_score(score: float) -> str:
    return f"{score:.4f}"


def _check_token(value: str, what: str) -> None:
    if not value or any(ch.isspace() for ch in value):
        raise RunFormatError(f"{what} must be non-empty without whitespace: {value!r}")


def validate_run(entries: Iterable[RunEntry]) -> None:
    """Check the ranked-list invariants; raise :class:`RunFormatError`."""
    done: set[str] = set()
    current = None
    prev = None
    docnos: set[str] = set()
    for e in entries:
        _check_token(e.num, "topic id")
        _check_token(e.docno, "docno")
        _check_token(e.tag, "run tag")
        if not math.isfinite(e.score):
            raise RunFormatError(f"non-finite score for {e.num} {e.docno}")
        if e.num != current:
            if e.num in done:
                raise RunFormatError(f"entries of topic {e.num} are not contiguous")
            if current is not None:
                done.add(current)
            current, prev, docnos = e.num, None, set()
        expected = 1 if prev is None else prev.rank + 1
        if e.rank != expected:
            raise RunFormatError(f"topic {e.num}: rank {e.rank} where {expected} expected")
        if e.docno in docnos:
            raise RunFormatError(f"topic {e.num}: duplicate docno {e.docno}")
        docnos.add(e.docno)
        if prev is not None and not (
            prev.score > e.score or (prev.score == e.score and prev.docno > e.docno)
        ):
            raise RunFormatError(
                f"topic {e.num}: {prev.docno} and {e.docno} out of (score desc, docno desc) order"
            )
        prev = e


def write_run(entries: Iterable[RunEntry]) -> bytes:
    """Serialise a run as ``num Q0 docno rank score tag`` lines, score to 4 decimals."""
    entries = list(entries)
    validate_run(entries)
    return "".join(
        f"{e.num} Q0 {e.docno} {e.rank} {format_score(e.score)} {e.tag}\n" for e in entries
    ).encode("utf-8")


def parse_run(source: Source) -> list[RunEntry]:
    """Parse a run file.  Only the line format is checked, not ranking order."""
    text = _check_utf8(_read(source))
    entries = []
    for lineno, line in enumerate(text.split("\n"), 1):
        cols = line.split()
        if not cols:
            continue
        if len(cols) != 6:
            raise ParseError(f"expected 6 columns, got {len(cols)}", line=lineno)
        num, _, docno, rank_s, score_s, tag = cols
        try:
            rank = int(rank_s)
            score = float(score_s)
        except ValueError:
            raise ParseError("bad rank or score", line=lineno, context=line.strip()) from None
        if not math.isfinite(score):
            raise ParseError("non-finite score", line=lineno)
        entries.append(RunEntry(num, docno, rank, score, tag))
    return entries
