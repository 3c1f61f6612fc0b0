"""Import of spans from an external OntoNotes-style tagger and knowledge-base type refinement."""
from __future__ import annotations

import dataclasses
import json
import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

from .corpus_io import Sentence
from .entities import DEFAULT_REGISTRY, EntityKind, EntitySpan, SpanSource, TypeRegistry
from .errors import CorpusFormatError, FetchError, LexiconError, SpanError, UnknownEntityType
from .kb import SparqlClient, binding_value, item_id

logger = logging.getLogger(__name__)

MISS = "MISS"

# Matches English labels/alt-labels case-insensitively; classes are the item's
# instance-of classes plus one subclass-of hop.
DEFAULT_LOOKUP_QUERY = """\
PREFIX rdfs: <http://www.w3.org/2000/01/rdf-schema#>
PREFIX skos: <http://www.w3.org/2004/02/skos/core#>
PREFIX wdt: <http://www.wikidata.org/prop/direct/>
SELECT ?item ?class ?classLabel WHERE {
  ?item rdfs:label|skos:altLabel ?label .
  FILTER(LANG(?label) = "en" && LCASE(STR(?label)) = "{label}")
  ?item wdt:P31/wdt:P279? ?class .
  OPTIONAL { ?class rdfs:label ?classLabel . FILTER(LANG(?classLabel) = "en") }
}
LIMIT 200
"""


@dataclass(frozen=True)
class RefinementRule:
    kb_class: str
    target_type: str
    priority: int

    def matches(self, class_id: str, class_label: Optional[str]) -> bool:
        want = self.kb_class.casefold()
        return want == class_id.casefold() or (class_label is not None and want == class_label.casefold())


@dataclass(frozen=True)
class KBItem:
    item_id: str
    classes: tuple[tuple[str, Optional[str]], ...]


@dataclass(frozen=True)
class RefinementDecision:
    sent_id: str
    start: int
    end: int
    surface: str
    item_id: str
    old_type: str
    new_type: str

    @property
    def changed(self) -> bool:
        return self.old_type != self.new_type


def _sparql_literal(text: str) -> str:
    return text.replace("\\", "\\\\").replace('"', '\\"').replace("\n", "\\n").replace("\r", "\\r")


class EntityLookup:
    """Exact label lookup of normalized surfaces through a cached SPARQL client."""

    def __init__(self, client: SparqlClient, query_template: str = DEFAULT_LOOKUP_QUERY):
        self.client = client
        self.query_template = query_template

    def query_for(self, surface: str) -> str:
        return self.query_template.replace("{label}", _sparql_literal(surface))

    def lookup(self, surface: str) -> list[KBItem]:
        try:
            rows = self.client.select(self.query_for(surface), key="lookup")
        except FetchError as exc:
            raise FetchError(exc.endpoint, exc.entity_type, f"{exc.reason} (surface {surface!r})") from exc
        classes: dict[str, list] = {}
        for row in rows:
            item = binding_value(row, "item")
            if not item:
                continue
            bucket = classes.setdefault(item_id(item), [])
            cls = binding_value(row, "class")
            if cls:
                entry = (item_id(cls), binding_value(row, "classLabel"))
                if entry not in bucket:
                    bucket.append(entry)
        return [KBItem(i, tuple(c)) for i, c in classes.items()]


def load_rules(path, registry: TypeRegistry = DEFAULT_REGISTRY) -> list[RefinementRule]:
    """TSV rows ``kb_class<TAB>target_type<TAB>priority``; ``#`` starts a comment line."""
    rules = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = [c.strip() for c in line.split("\t")]
            if len(cols) != 3:
                raise LexiconError(f"{path}: row {lineno}: expected kb_class, target_type, priority")
            try:
                priority = int(cols[2])
            except ValueError:
                raise LexiconError(f"{path}: row {lineno}: priority must be an integer") from None
            rules.append(RefinementRule(cols[0], cols[1], priority))
    return validate_rules(rules, registry)


def validate_rules(rules: Iterable[RefinementRule], registry: TypeRegistry = DEFAULT_REGISTRY) -> list[RefinementRule]:
    out = []
    seen = set()
    for rule in rules:
        etype = registry.get(rule.target_type)
        if etype.kind is not EntityKind.GENERIC:
            raise LexiconError(f"refinement target {etype.name} is not a generic entity type")
        if rule.priority in seen:
            raise LexiconError(f"duplicate refinement priority {rule.priority}")
        seen.add(rule.priority)
        out.append(dataclasses.replace(rule, target_type=etype.name))
    return out


def _as_sentence_map(corpus) -> dict[str, Sentence]:
    if isinstance(corpus, Mapping):
        return dict(corpus)
    return {s.sent_id: s for s in corpus}


def load_generic_spans(path, corpus, lenient: bool = False, registry: TypeRegistry = DEFAULT_REGISTRY,
                       skipped: Optional[Counter] = None) -> dict[str, list[EntitySpan]]:
    """Read tagger output ``{"sent_id", "spans": [{"start", "end", "type", "score"}]}`` per line.

    Unknown sentences, out-of-bounds spans and spans overlapping an earlier one
    raise, or are skipped and counted in ``skipped`` when ``lenient``. An
    unknown or non-generic type name always raises.
    """
    sentences = _as_sentence_map(corpus)
    generic_names = registry.names(EntityKind.GENERIC)
    skipped = skipped if skipped is not None else Counter()
    out: dict[str, list[EntitySpan]] = {}

    def reject(reason, message):
        if not lenient:
            raise SpanError(message)
        skipped[reason] += 1

    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
                sent_id = str(rec["sent_id"])
                records = list(rec.get("spans", []))
            except (json.JSONDecodeError, KeyError, TypeError):
                raise CorpusFormatError(f"{path}: line {lineno}: expected {{sent_id, spans}} record") from None
            sentence = sentences.get(sent_id)
            if sentence is None:
                reject("unknown_sentence", f"line {lineno}: unknown sent_id {sent_id}")
                continue
            bucket = out.setdefault(sent_id, [])
            for r in records:
                try:
                    start, end, name = int(r["start"]), int(r["end"]), str(r["type"])
                    score = None if r.get("score") is None else float(r["score"])
                except (KeyError, TypeError, ValueError):
                    raise CorpusFormatError(f"{path}: line {lineno}: bad span record {r!r}") from None
                if name not in registry or registry.kind(name) is not EntityKind.GENERIC:
                    raise UnknownEntityType(name, generic_names)
                if not (0 <= start < end <= len(sentence.tokens)):
                    reject("out_of_bounds", f"line {lineno}: span [{start},{end}) out of bounds "
                                            f"for {len(sentence.tokens)}-token sentence {sent_id}")
                    continue
                span = EntitySpan(sent_id, start, end, registry.canonical(name), SpanSource.MODEL, score)
                if any(span.overlaps(other) for other in bucket):
                    reject("overlap", f"line {lineno}: span [{start},{end}) overlaps another span in {sent_id}")
                    continue
                bucket.append(span)
    for spans in out.values():
        spans.sort(key=lambda s: (s.start, s.end))
    if sum(skipped.values()):
        logger.warning("skipped generic span records: %s", dict(skipped))
    return out


def surface_of(span: EntitySpan, sentence: Sentence) -> str:
    return " ".join(t.text.casefold() for t in sentence.tokens[span.start:span.end])


def refine_span(span: EntitySpan, sentence: Sentence, kb: EntityLookup,
                rules: Sequence[RefinementRule],
                decisions: Optional[list] = None) -> EntitySpan:
    """Retype a model span from the best-priority rule matching its knowledge-base classes.

    Surfaces the knowledge base does not know, or whose classes match no rule,
    come back unchanged. Boundaries never change.
    """
    if span.source is not SpanSource.MODEL:
        raise SpanError(f"only MODEL spans are refined, got {span.source.value}")
    surface = surface_of(span, sentence)
    items = kb.lookup(surface) if rules else []
    best = None
    for item in items:
        for class_id, class_label in item.classes:
            for rule in rules:
                if rule.matches(class_id, class_label) and (best is None or rule.priority > best[0].priority):
                    best = (rule, item.item_id)
    if best is not None:
        new_type, hit = best[0].target_type, best[1]
    else:
        new_type, hit = span.entity_type, (items[0].item_id if items else MISS)
    decision = RefinementDecision(span.sent_id, span.start, span.end, surface, hit,
                                  span.entity_type, new_type)
    logger.debug("refine %r: %s %s -> %s", surface, hit, span.entity_type, new_type)
    if decisions is not None:
        decisions.append(decision)
    if new_type == span.entity_type:
        return span
    return dataclasses.replace(span, entity_type=new_type)


def annotate_generic(corpus, spans_path, kb: Optional[EntityLookup] = None,
                     rules: Sequence[RefinementRule] = (), lenient: bool = False,
                     workers: int = 1, decisions: Optional[list] = None,
                     registry: TypeRegistry = DEFAULT_REGISTRY,
                     skipped: Optional[Counter] = None) -> dict[str, list[EntitySpan]]:
    """Load tagger spans and refine each one; no rules or no knowledge base means no refinement."""
    sentences = _as_sentence_map(corpus)
    loaded = load_generic_spans(spans_path, sentences, lenient=lenient, registry=registry, skipped=skipped)
    if kb is None or not rules:
        return loaded

    jobs = [(sid, span) for sid, spans in loaded.items() for span in spans]

    def work(job):
        sid, span = job
        local = []
        return refine_span(span, sentences[sid], kb, rules, local), local

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, jobs))
    else:
        results = [work(job) for job in jobs]

    out: dict[str, list[EntitySpan]] = {sid: [] for sid in loaded}
    for (sid, _), (span, local) in zip(jobs, results):
        out[sid].append(span)
        if decisions is not None:
            decisions.extend(local)
    for spans in out.values():
        spans.sort(key=lambda s: (s.start, s.end))
    return out
