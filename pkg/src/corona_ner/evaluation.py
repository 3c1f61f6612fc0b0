"""Entity-level scoring, Fleiss' kappa, repeated-run aggregation and corpus statistics."""
from __future__ import annotations

import json
import statistics
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .entities import span_triple
from .errors import EvaluationError


def _ratio(num: float, den: float) -> float:
    return num / den if den else 0.0


@dataclass(frozen=True)
class Score:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return _ratio(self.tp, self.tp + self.fp)

    @property
    def recall(self) -> float:
        return _ratio(self.tp, self.tp + self.fn)

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return _ratio(2 * p * r, p + r)

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn,
                "precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass
class EvalReport:
    per_type: dict[str, Score]
    micro: Score
    support: dict[str, int]
    n_sentences: int
    config: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_sentences": self.n_sentences,
            "micro": self.micro.to_dict(),
            "per_type": {t: s.to_dict() for t, s in sorted(self.per_type.items())},
            "support": dict(sorted(self.support.items())),
            "config": self.config,
        }

    def write_json(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=False)
            fh.write("\n")

    def render(self) -> str:
        width = max([len("micro")] + [len(t) for t in self.per_type])
        head = f"{'type':<{width}}  {'prec':>7}  {'rec':>7}  {'f1':>7}  {'tp':>6}  {'fp':>6}  {'fn':>6}  {'support':>7}"
        lines = [head, "-" * len(head)]

        def row(name, s, support):
            return (f"{name:<{width}}  {s.precision:7.4f}  {s.recall:7.4f}  {s.f1:7.4f}  "
                    f"{s.tp:6d}  {s.fp:6d}  {s.fn:6d}  {support:7d}")

        for name in sorted(self.per_type):
            lines.append(row(name, self.per_type[name], self.support.get(name, 0)))
        lines.append("-" * len(head))
        lines.append(row("micro", self.micro, sum(self.support.values())))
        lines.append(f"sentences: {self.n_sentences}")
        return "\n".join(lines)


def entity_f1(gold: Mapping[str, Iterable], pred: Mapping[str, Iterable]) -> EvalReport:
    """Strict span scoring: a prediction is correct only if start, end and type all match.

    Spans may be EntitySpans or ``(start, end, type)`` triples; duplicates are
    matched one-to-one.
    """
    if set(gold) != set(pred):
        only_gold = sorted(set(gold) - set(pred))
        only_pred = sorted(set(pred) - set(gold))
        raise EvaluationError(f"sentence ids differ: only in gold {only_gold}, only in pred {only_pred}")
    tp, fp, fn = Counter(), Counter(), Counter()
    support = Counter()
    for sid in gold:
        g = Counter(span_triple(s) for s in gold[sid])
        p = Counter(span_triple(s) for s in pred[sid])
        for key in g.keys() | p.keys():
            etype = key[2]
            hit = min(g[key], p[key])
            tp[etype] += hit
            fp[etype] += p[key] - hit
            fn[etype] += g[key] - hit
            support[etype] += g[key]
    types = set(tp) | set(fp) | set(fn)
    per_type = {t: Score(tp[t], fp[t], fn[t]) for t in types}
    micro = Score(sum(tp.values()), sum(fp.values()), sum(fn.values()))
    return EvalReport(per_type, micro, {t: support[t] for t in types}, len(gold))


@dataclass(frozen=True)
class AgreementTable:
    """``counts[i][j]``: how many raters put item ``i`` in category ``j``."""

    counts: tuple[tuple[int, ...], ...]
    categories: tuple[str, ...] = ()

    @classmethod
    def from_ratings(cls, ratings: Sequence[Sequence[str]], categories: Sequence[str] = ()) -> "AgreementTable":
        """Build the table from one label sequence per rater over the same items."""
        if len(ratings) < 2:
            raise EvaluationError("agreement needs at least two raters")
        n_items = len(ratings[0])
        if any(len(r) != n_items for r in ratings):
            raise EvaluationError("raters labelled different numbers of items")
        cats = list(categories) or sorted({lab for r in ratings for lab in r})
        index = {c: j for j, c in enumerate(cats)}
        rows = []
        for i in range(n_items):
            row = [0] * len(cats)
            for r in ratings:
                try:
                    row[index[r[i]]] += 1
                except KeyError:
                    raise EvaluationError(f"label {r[i]!r} not among the categories") from None
            rows.append(tuple(row))
        return cls(tuple(rows), tuple(cats))


def fleiss_kappa(table) -> float:
    """Fleiss' kappa for a fixed number of raters per item.

    Accepts an AgreementTable or a plain N x K count matrix.
    """
    counts = table.counts if isinstance(table, AgreementTable) else table
    rows = [list(r) for r in counts]
    if not rows:
        raise EvaluationError("agreement table has no items")
    n = sum(rows[0])
    for i, r in enumerate(rows):
        if any(c < 0 for c in r):
            raise EvaluationError(f"negative count in row {i}")
        if sum(r) != n:
            raise EvaluationError(f"row {i} sums to {sum(r)}, expected {n} raters")
    if n < 2:
        raise EvaluationError("agreement needs at least two raters per item")
    n_items = len(rows)
    k = len(rows[0])
    p_bar = sum((sum(c * c for c in r) - n) / (n * (n - 1)) for r in rows) / n_items
    p_e = sum((sum(r[j] for r in rows) / (n_items * n)) ** 2 for j in range(k))
    if p_bar == 1.0:
        return 1.0
    if p_e == 1.0:
        raise EvaluationError("degenerate agreement table: chance agreement is 1")
    return (p_bar - p_e) / (1 - p_e)


@dataclass(frozen=True)
class RunAggregate:
    scores: tuple[float, ...]
    mean: float
    std: float


def aggregate_runs(scores: Sequence[float]) -> RunAggregate:
    """Mean and sample (n-1) standard deviation; a single run has std 0."""
    scores = tuple(float(s) for s in scores)
    if not scores:
        raise EvaluationError("no scores to aggregate")
    mean = statistics.fmean(scores)
    std = statistics.stdev(scores) if len(scores) > 1 else 0.0
    return RunAggregate(scores, mean, std)


@dataclass
class CorpusStats:
    per_type: dict[str, int]
    total_entities: int
    total_sentences: int

    def to_dict(self) -> dict:
        return {"per_type": dict(sorted(self.per_type.items())),
                "total_entities": self.total_entities,
                "total_sentences": self.total_sentences}


def corpus_stats(annotated) -> CorpusStats:
    """Count spans per type over ``{sent_id: spans}`` or a list of annotated sentences."""
    if isinstance(annotated, Mapping):
        span_lists = list(annotated.values())
    else:
        span_lists = [s.spans for s in annotated]
    per_type = Counter(span_triple(s)[2] for spans in span_lists for s in spans)
    return CorpusStats(dict(per_type), sum(per_type.values()), len(span_lists))
