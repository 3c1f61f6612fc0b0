"""Health-first conflict resolution between annotation passes, and the BIO label codec."""
from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .entities import DEFAULT_REGISTRY, EntitySpan, SpanSource, span_triple
from .errors import BIOError, CorpusFormatError, HarmonizationError

HEALTH = "health"
GENERIC = "generic"

_SOURCE_RANK = {
    SpanSource.EXPERT: 0,
    SpanSource.GOLD_SEED: 1,
    SpanSource.SILVER_SEED: 2,
    SpanSource.MODEL: 3,
}


@dataclass(frozen=True)
class HarmonizationPolicy:
    """Which pass wins a conflict, then GOLD > SILVER > MODEL, longer span, earlier start."""

    kind_priority: tuple[str, ...] = (HEALTH, GENERIC)

    def __post_init__(self):
        if sorted(self.kind_priority) != sorted((HEALTH, GENERIC)):
            raise ValueError(f"kind_priority must order {HEALTH!r} and {GENERIC!r}, got {self.kind_priority}")

    def rank(self, span: EntitySpan, kind: str) -> tuple:
        return (
            self.kind_priority.index(kind),
            _SOURCE_RANK[span.source],
            -(span.end - span.start),
            span.start,
            span.end,
            span.entity_type,
        )


DEFAULT_POLICY = HarmonizationPolicy()


def _check_flat(spans: Sequence[EntitySpan], which: str) -> None:
    ordered = sorted(spans, key=lambda s: (s.start, s.end))
    for a, b in zip(ordered, ordered[1:]):
        if a.overlaps(b):
            raise HarmonizationError(
                f"{which} spans overlap internally: [{a.start},{a.end}) and [{b.start},{b.end}) in {a.sent_id}")


def harmonize(health: Sequence[EntitySpan], generic: Sequence[EntitySpan],
              policy: HarmonizationPolicy = DEFAULT_POLICY) -> list[EntitySpan]:
    """Merge two flat span lists of one sentence into a single flat list.

    Spans are accepted greedily in policy order; a span sharing any token with an
    already accepted span is dropped whole, never truncated. Under the default
    policy every health span survives and a generic span survives only when it is
    disjoint from all of them.
    """
    _check_flat(health, HEALTH)
    _check_flat(generic, GENERIC)
    sent_ids = {s.sent_id for s in health} | {s.sent_id for s in generic}
    if len(sent_ids) > 1:
        raise HarmonizationError(f"spans from several sentences: {sorted(sent_ids)}")

    candidates = [(policy.rank(s, HEALTH), s) for s in health]
    candidates += [(policy.rank(s, GENERIC), s) for s in generic]
    candidates.sort(key=lambda pair: pair[0])
    kept: list[EntitySpan] = []
    for _, span in candidates:
        if not any(span.overlaps(k) for k in kept):
            kept.append(span)
    kept.sort(key=lambda s: (s.start, s.end))
    return kept


# -- BIO ---------------------------------------------------------------------

def parse_label(label: str) -> tuple[str, Optional[str]]:
    """Split ``B-X`` / ``I-X`` / ``O`` into prefix and type."""
    if label == "O":
        return "O", None
    if len(label) > 2 and label[1] == "-" and label[0] in "BI":
        return label[0], label[2:]
    raise BIOError(f"malformed label {label!r}")


def validate_bio(labels: Sequence[str]) -> None:
    prev = "O"
    for i, label in enumerate(labels):
        prefix, etype = parse_label(label)
        if prefix == "I" and prev not in (f"B-{etype}", f"I-{etype}"):
            raise BIOError(f"invalid transition to {label} at index {i}", index=i)
        prev = label


def spans_to_bio(sentence, spans: Iterable) -> list[str]:
    """Label a sentence (or a token count) from flat spans."""
    n = sentence if isinstance(sentence, int) else len(sentence.tokens)
    labels = ["O"] * n
    for start, end, etype in sorted(span_triple(s) for s in spans):
        if not (0 <= start < end <= n):
            raise BIOError(f"span [{start},{end}) outside a {n}-token sentence")
        if any(lab != "O" for lab in labels[start:end]):
            raise BIOError(f"overlapping span [{start},{end}) {etype}", index=start)
        labels[start] = f"B-{etype}"
        for i in range(start + 1, end):
            labels[i] = f"I-{etype}"
    return labels


def bio_to_spans(labels: Sequence[str], lenient: bool = False) -> list[tuple[int, int, str]]:
    """Decode BIO labels into ``(start, end, type)`` triples.

    In lenient mode an ``I-X`` that does not continue an ``X`` entity opens a new one.
    """
    spans = []
    start, cur = None, None
    for i, label in enumerate(labels):
        prefix, etype = parse_label(label)
        if prefix == "I" and cur != etype:
            if not lenient:
                raise BIOError(f"invalid transition to {label} at index {i}", index=i)
            prefix = "B"
        if prefix == "I":
            continue
        if cur is not None:
            spans.append((start, i, cur))
        start, cur = (i, etype) if prefix == "B" else (None, None)
    if cur is not None:
        spans.append((start, len(labels), cur))
    return spans


# -- annotated-sentence JSONL ------------------------------------------------

@dataclass
class AnnotatedSentence:
    sent_id: str
    tokens: list[str]
    labels: list[str]
    spans: list[EntitySpan]

    def to_dict(self) -> dict:
        return {
            "sent_id": self.sent_id,
            "tokens": self.tokens,
            "labels": self.labels,
            "spans": [s.to_dict() for s in self.spans],
        }


def annotate_sentence(sentence, spans: Sequence[EntitySpan]) -> AnnotatedSentence:
    spans = sorted(spans, key=lambda s: (s.start, s.end))
    return AnnotatedSentence(sentence.sent_id, sentence.words, spans_to_bio(sentence, spans), spans)


def write_annotated_jsonl(sentences: Iterable[AnnotatedSentence], path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for sent in sentences:
            fh.write(json.dumps(sent.to_dict(), ensure_ascii=False) + "\n")


def read_annotated_jsonl(path, registry=DEFAULT_REGISTRY) -> list[AnnotatedSentence]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sent_id = str(rec["sent_id"])
                spans = [
                    EntitySpan(sent_id, int(s["start"]), int(s["end"]), registry.canonical(s["type"]),
                               SpanSource(s.get("source", "EXPERT")), s.get("score"))
                    for s in rec.get("spans", [])
                ]
                sent = AnnotatedSentence(sent_id, list(rec["tokens"]), list(rec["labels"]), spans)
            except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
                raise CorpusFormatError(f"{path}: line {lineno}: bad annotated sentence ({exc})") from None
            if len(sent.tokens) != len(sent.labels):
                raise CorpusFormatError(f"{path}: line {lineno}: ragged tokens/labels")
            out.append(sent)
    return out


def harmonize_corpus(health: Mapping[str, Sequence[EntitySpan]],
                     generic: Mapping[str, Sequence[EntitySpan]],
                     policy: HarmonizationPolicy = DEFAULT_POLICY) -> dict[str, list[EntitySpan]]:
    keys = list(health) + [k for k in generic if k not in health]
    return {k: harmonize(health.get(k, ()), generic.get(k, ()), policy) for k in keys}
