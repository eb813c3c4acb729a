"""Ranked-retrieval effectiveness measures, following trec_eval conventions.

Rankings are always re-sorted by (score desc, docno desc) before measuring;
stored ranks are ignored.  Unjudged documents count as non-relevant for the
precision-based measures and are skipped entirely by bpref.  Topics with no
relevant judgments are excluded from every mean.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import EvaluationError, NoRelevantDocuments
from .search import RankedList, RunFile, canonical_order
from .trec_io import Qrels, parse_run

RECALL_LEVELS = tuple(i / 10 for i in range(11))
GMAP_FLOOR = 1e-5

MEASURES = ("map", "gm_map", "Rprec", "bpref", "recip_rank", "P_5", "iprec_at_recall_0.00")
_PER_TOPIC = ("map", "Rprec", "bpref", "recip_rank", "P_5", "iprec_at_recall_0.00")


def _ranking(ranked) -> list[str]:
    items = ranked.items if isinstance(ranked, RankedList) else ranked
    return [d for d, _ in canonical_order(items)]


def _require_relevant(qrels: Qrels, num: str) -> set[str]:
    rel = qrels.relevant(num)
    if not rel:
        raise NoRelevantDocuments(f"topic {num} has no relevant documents")
    return rel


def average_precision(ranked, qrels: Qrels, num: str) -> float:
    """Mean over the relevant set of precision at each relevant document's rank;
    relevant documents never retrieved contribute zero."""
    rel = _require_relevant(qrels, num)
    hits = 0
    total = 0.0
    for rank, docno in enumerate(_ranking(ranked), 1):
        if docno in rel:
            hits += 1
            total += hits / rank
    return total / len(rel)


def mean_average_precision(run: RunFile, qrels: Qrels) -> float:
    aps = [average_precision(rl, qrels, rl.num) for rl in _evaluable(run, qrels)]
    return sum(aps) / len(aps)


def gmap(aps: Sequence[float]) -> float:
    """Geometric mean of APs with zeros floored at 1e-5."""
    if not aps:
        raise EvaluationError("gmap of no topics")
    return math.exp(sum(math.log(max(ap, GMAP_FLOOR)) for ap in aps) / len(aps))


def precision_at_k(ranked, qrels: Qrels, num: str, k: int = 5) -> float:
    if k < 1:
        raise ValueError("k must be >= 1")
    grades = qrels.grades(num)
    hits = sum(1 for d in _ranking(ranked)[:k] if grades.get(d, 0) > 0)
    return hits / k


def r_precision(ranked, qrels: Qrels, num: str) -> float:
    rel = _require_relevant(qrels, num)
    R = len(rel)
    return sum(1 for d in _ranking(ranked)[:R] if d in rel) / R


def bpref(ranked, qrels: Qrels, num: str) -> float:
    rel = _require_relevant(qrels, num)
    nonrel = qrels.nonrelevant(num)
    R = len(rel)
    denom = min(R, len(nonrel))
    above = 0
    total = 0.0
    for docno in _ranking(ranked):
        if docno in rel:
            if denom == 0:
                total += 1.0
            else:
                total += 1.0 - min(above, denom) / denom
        elif docno in nonrel:
            above += 1
    return total / R


def reciprocal_rank(ranked, qrels: Qrels, num: str) -> float:
    grades = qrels.grades(num)
    for rank, docno in enumerate(_ranking(ranked), 1):
        if grades.get(docno, 0) > 0:
            return 1.0 / rank
    return 0.0


def interpolated_pr_curve(ranked, qrels: Qrels, num: str) -> list[float]:
    """Interpolated precision at recall 0.0, 0.1, ..., 1.0.

    Precision at level r is the best precision at any cut-off whose recall
    is at least r, or 0 when no cut-off reaches r.
    """
    rel = _require_relevant(qrels, num)
    R = len(rel)
    points = []  # (recall, precision) at each relevant hit
    hits = 0
    for rank, docno in enumerate(_ranking(ranked), 1):
        if docno in rel:
            hits += 1
            points.append((hits / R, hits / rank))
    curve = []
    best = 0.0
    # sweep levels from high recall to low, carrying the running maximum
    j = len(points) - 1
    for level in reversed(RECALL_LEVELS):
        while j >= 0 and points[j][0] >= level - 1e-12:
            best = max(best, points[j][1])
            j -= 1
        curve.append(best)
    curve.reverse()
    return curve


@dataclass
class TopicMetrics:
    ap: float
    rprec: float
    bpref: float
    recip_rank: float
    p5: float
    curve: list[float]

    @property
    def iprec0(self) -> float:
        return self.curve[0]

    def measure(self, name: str) -> float:
        return {
            "map": self.ap,
            "Rprec": self.rprec,
            "bpref": self.bpref,
            "recip_rank": self.recip_rank,
            "P_5": self.p5,
            "iprec_at_recall_0.00": self.iprec0,
        }[name]


@dataclass
class MetricReport:
    per_topic: dict[str, TopicMetrics]
    aggregate: dict[str, float]
    curve: list[float]
    excluded: list[str] = field(default_factory=list)

    @property
    def num_topics(self) -> int:
        return len(self.per_topic)


def _evaluable(run: RunFile, qrels: Qrels) -> list[RankedList]:
    run_topics = [rl.num for rl in run.lists if rl.items]
    judged = set(qrels.topics())
    if not set(run_topics) & judged:
        raise EvaluationError(
            "run and qrels share no topics; run: "
            f"{sorted(run_topics)}; qrels: {sorted(judged)}"
        )
    usable = [rl for rl in run.lists if rl.items and qrels.num_relevant(rl.num) > 0]
    if not usable:
        raise EvaluationError("no run topic has relevant judgments")
    return usable


def evaluate_run(run: RunFile, qrels: Qrels) -> MetricReport:
    """Compute every measure per topic and averaged over evaluable topics.

    Evaluated topics are those retrieved by the run that have at least one
    relevant judgment; others are listed in ``excluded``.
    """
    usable = _evaluable(run, qrels)
    per_topic = {}
    for rl in usable:
        num = rl.num
        per_topic[num] = TopicMetrics(
            ap=average_precision(rl, qrels, num),
            rprec=r_precision(rl, qrels, num),
            bpref=bpref(rl, qrels, num),
            recip_rank=reciprocal_rank(rl, qrels, num),
            p5=precision_at_k(rl, qrels, num, 5),
            curve=interpolated_pr_curve(rl, qrels, num),
        )
    kept = set(per_topic)
    excluded = [rl.num for rl in run.lists if rl.num not in kept]
    n = len(per_topic)
    vals = list(per_topic.values())
    aggregate = {name: sum(m.measure(name) for m in vals) / n for name in _PER_TOPIC}
    aggregate["gm_map"] = gmap([m.ap for m in vals])
    curve = [sum(m.curve[i] for m in vals) / n for i in range(len(RECALL_LEVELS))]
    return MetricReport(per_topic, aggregate, curve, excluded)


def select_measures(spec: str | None) -> list[str]:
    """Parse ``all`` or a comma list of measure names."""
    if spec is None or spec.strip() in ("", "all"):
        return list(MEASURES)
    names = [s.strip() for s in spec.split(",") if s.strip()]
    unknown = [n for n in names if n not in MEASURES]
    if unknown:
        raise ValueError(f"unknown measure(s) {unknown}; available: {', '.join(MEASURES)}")
    return names


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def report_tsv(report: MetricReport, measures: Iterable[str] | None = None) -> str:
    """``measure<TAB>topic<TAB>value`` rows; aggregates use topic ``all``."""
    measures = list(measures or MEASURES)
    rows = []
    for num, m in report.per_topic.items():
        for name in measures:
            if name in _PER_TOPIC:
                rows.append(f"{name}\t{num}\t{_fmt(m.measure(name))}")
    rows.append(f"num_q\tall\t{report.num_topics}")
    for name in measures:
        rows.append(f"{name}\tall\t{_fmt(report.aggregate[name])}")
    return "\n".join(rows) + "\n"


def report_table(report: MetricReport, measures: Iterable[str] | None = None) -> str:
    """Aligned table: one row per topic plus ``all``, one column per measure."""
    measures = list(measures or MEASURES)
    header = ["topic"] + measures
    body = []
    for num, m in report.per_topic.items():
        body.append([num] + [_fmt(m.measure(n)) if n in _PER_TOPIC else "" for n in measures])
    body.append(["all"] + [_fmt(report.aggregate[n]) for n in measures])
    return _align([header] + body)


def curve_tsv(curve: Sequence[float]) -> str:
    return "".join(f"{level:.1f}\t{_fmt(p)}\n" for level, p in zip(RECALL_LEVELS, curve))


def _align(rows: list[list[str]]) -> str:
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]))]
    lines = []
    for r in rows:
        cells = [r[0].ljust(widths[0])] + [c.rjust(w) for c, w in zip(r[1:], widths[1:])]
        lines.append("  ".join(cells).rstrip())
    return "\n".join(lines) + "\n"


# -- model x field-mode comparison -----------------------------------------------

ABSENT = "NA"


@dataclass
class MapMatrix:
    models: list[str]
    modes: list[str]
    values: dict[tuple[str, str], float | None]

    def get(self, model: str, mode: str) -> float | None:
        return self.values.get((model, mode))

    def _cell(self, model, mode) -> str:
        v = self.get(model, mode)
        return ABSENT if v is None else _fmt(v)

    def to_text(self) -> str:
        rows = [["model"] + self.modes]
        rows += [[m] + [self._cell(m, f) for f in self.modes] for m in self.models]
        return _align(rows)

    def to_tsv(self) -> str:
        lines = ["model\t" + "\t".join(self.modes)]
        lines += [m + "\t" + "\t".join(self._cell(m, f) for f in self.modes) for m in self.models]
        return "\n".join(lines) + "\n"


def comparison_matrix(
    runs: Mapping[tuple[str, str], RunFile | None],
    qrels: Qrels,
    models: Sequence[str] | None = None,
    modes: Sequence[str] | None = None,
) -> MapMatrix:
    """MAP for every (model, field mode) run.  Missing or unevaluable runs
    become absent cells rather than zeros."""
    if models is None:
        models = list(dict.fromkeys(m for m, _ in runs))
    if modes is None:
        modes = list(dict.fromkeys(f for _, f in runs))
    values: dict[tuple[str, str], float | None] = {}
    for model in models:
        for mode in modes:
            run = runs.get((model, mode))
            if run is None:
                values[(model, mode)] = None
                continue
            try:
                values[(model, mode)] = mean_average_precision(run, qrels)
            except EvaluationError:
                values[(model, mode)] = None
    return MapMatrix(list(models), list(modes), values)


def load_run(source) -> RunFile:
    return RunFile.from_entries(parse_run(source))
