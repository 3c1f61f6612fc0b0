"""End-to-end orchestration: clean, split, annotate with seeds and tagger spans, harmonize, write."""
from __future__ import annotations

import json
import logging
import os
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Optional

import yaml

from . import corpus_io
from .corpus_io import Document, Sentence
from .entities import DEFAULT_REGISTRY
from .errors import ConfigError, CorpusFormatError
from .evaluation import EvalReport, corpus_stats, entity_f1
from .gazetteer import annotate_health, compile_lexicon
from .generic import DEFAULT_LOOKUP_QUERY, EntityLookup, annotate_generic, load_rules
from .harmonizer import (GENERIC, HEALTH, AnnotatedSentence, HarmonizationPolicy, annotate_sentence,
                         bio_to_spans, harmonize, read_annotated_jsonl, write_annotated_jsonl)
from .kb import SparqlClient, resolve_endpoint
from .seeds import Provenance, SeedLexicon, fetch_silver_seeds, load_lexicon, merge_lexicons, write_lexicon

logger = logging.getLogger(__name__)

PACKAGED = "default"


def packaged_file(name: str) -> Path:
    return Path(str(resources.files("corona_ner") / "data" / name))


def default_silver_queries() -> dict[str, str]:
    return yaml.safe_load(packaged_file("silver_queries.yaml").read_text(encoding="utf-8"))


@dataclass
class SilverFetchConfig:
    endpoint: Optional[str] = None
    queries: dict[str, str] = field(default_factory=dict)
    cache: Optional[Path] = None
    max_rows: int = 10000
    timeout: float = 60.0


@dataclass
class GenericConfig:
    spans: Optional[Path] = None
    rules: Optional[Path] = None
    endpoint: Optional[str] = None
    cache: Optional[Path] = None
    offline: bool = False
    timeout: float = 60.0
    query: str = DEFAULT_LOOKUP_QUERY


@dataclass
class PipelineConfig:
    corpus: Path
    gold_seeds: Path
    conll_out: Path
    jsonl_out: Path
    report_out: Path
    silver_seeds: Optional[Path] = None
    silver_fetch: Optional[SilverFetchConfig] = None
    generic: GenericConfig = field(default_factory=GenericConfig)
    pos_tags: Optional[Path] = None
    policy: HarmonizationPolicy = field(default_factory=HarmonizationPolicy)
    strip_chars: str = "".join(sorted(corpus_io.DEFAULT_STRIP_CHARS))
    abbreviations: frozenset = corpus_io.DEFAULT_ABBREVIATIONS
    lenient: bool = False
    case_sensitive: bool = False
    pos_filter: bool = False
    workers: int = 1

    def validate(self, for_fetch: bool = False) -> "PipelineConfig":
        def need(path, what):
            if path is None or not Path(path).is_file():
                raise ConfigError(f"{what} not found: {path}")

        if for_fetch:
            if self.silver_fetch is None:
                raise ConfigError("config has no silver_fetch section")
            if self.silver_seeds is None:
                raise ConfigError("seeds.silver must name the TSV file to write")
            return self
        need(self.corpus, "corpus")
        need(self.gold_seeds, "gold seed file")
        if self.silver_seeds is not None and self.silver_fetch is None:
            need(self.silver_seeds, "silver seed file")
        if self.silver_seeds is None and self.silver_fetch is None:
            raise ConfigError("either seeds.silver or a silver_fetch section is required")
        if self.generic.spans is not None:
            need(self.generic.spans, "generic span file")
        if self.generic.rules is not None:
            need(self.generic.rules, "refinement rule file")
        if self.pos_tags is not None:
            need(self.pos_tags, "PoS tag file")
        if self.pos_filter and self.pos_tags is None:
            raise ConfigError("pos_filter needs a pos_tags file")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        return self


def load_config(path, **overrides) -> PipelineConfig:
    """Read a YAML pipeline config; relative paths resolve against its directory."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text(encoding="utf-8")) or {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML ({exc})") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    base = path.parent

    def p(value, packaged=None):
        if value is None:
            return None
        if value == PACKAGED and packaged:
            return packaged_file(packaged)
        return (base / str(value)).resolve() if not Path(str(value)).is_absolute() else Path(str(value))

    try:
        seeds = raw.get("seeds") or {}
        output = raw.get("output") or {}
        options = raw.get("options") or {}
        cleaning = raw.get("cleaning") or {}

        fetch = None
        if raw.get("silver_fetch") is not None:
            sf = raw["silver_fetch"] or {}
            queries = sf.get("queries")
            if queries is None or queries == PACKAGED:
                queries = default_silver_queries()
            elif isinstance(queries, str):
                queries = yaml.safe_load(p(queries).read_text(encoding="utf-8"))
            fetch = SilverFetchConfig(sf.get("endpoint"), dict(queries), p(sf.get("cache")),
                                      int(sf.get("max_rows", 10000)), float(sf.get("timeout", 60)))

        g = raw.get("generic") or {}
        query = g.get("query", DEFAULT_LOOKUP_QUERY)
        generic = GenericConfig(p(g.get("spans")), p(g.get("rules"), "refinement_rules.tsv"),
                                g.get("endpoint"), p(g.get("cache")), bool(g.get("offline", False)),
                                float(g.get("timeout", 60)), query)

        priority = (raw.get("harmonization") or {}).get("priority", [HEALTH, GENERIC])
        cfg = PipelineConfig(
            corpus=p(raw.get("corpus")),
            gold_seeds=p(seeds.get("gold")),
            silver_seeds=p(seeds.get("silver")),
            silver_fetch=fetch,
            generic=generic,
            pos_tags=p(raw.get("pos_tags")),
            policy=HarmonizationPolicy(tuple(priority)),
            conll_out=p(output.get("conll", "annotated.conll")),
            jsonl_out=p(output.get("jsonl", "annotated.jsonl")),
            report_out=p(output.get("report", "report.json")),
            strip_chars=str(cleaning.get("strip_chars", "#*")),
            abbreviations=frozenset(cleaning.get("abbreviations", corpus_io.DEFAULT_ABBREVIATIONS)),
            lenient=bool(options.get("lenient", False)),
            case_sensitive=bool(options.get("case_sensitive", False)),
            pos_filter=bool(options.get("pos_filter", False)),
            workers=int(options.get("workers", 1)),
        )
    except (TypeError, ValueError, AttributeError, OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"{path}: {exc}") from None
    for key, value in overrides.items():
        if value is not None:
            setattr(cfg, key, value)
    return cfg


def prepare_corpus(docs: list[Document], cfg: PipelineConfig) -> list[Sentence]:
    sentences = []
    for doc in docs:
        cleaned = Document(doc.doc_id, corpus_io.clean_text(doc.body, cfg.strip_chars),
                           doc.title, doc.published_at, doc.language)
        sentences.extend(corpus_io.document_sentences(cleaned, cfg.abbreviations))
    if cfg.pos_tags is not None:
        tags = corpus_io.read_pos_tags(cfg.pos_tags)
        sentences = [s.with_pos(tags[s.sent_id]) if s.sent_id in tags else s for s in sentences]
    return sentences


def build_lexicon(cfg: PipelineConfig) -> SeedLexicon:
    gold = load_lexicon(cfg.gold_seeds)
    if cfg.silver_seeds is not None and cfg.silver_seeds.is_file():
        silver = load_lexicon(cfg.silver_seeds)
    else:
        silver = SeedLexicon.from_entries(fetch_seeds(cfg))
    return merge_lexicons(gold, silver)


def fetch_seeds(cfg: PipelineConfig):
    sf = cfg.silver_fetch
    endpoint = resolve_endpoint(sf.endpoint)
    return fetch_silver_seeds(endpoint, sf.queries, timeout=sf.timeout, max_rows=sf.max_rows,
                              cache_path=sf.cache)


@dataclass
class AnnotationResult:
    sentences: list[AnnotatedSentence]
    stats: dict


def annotate_corpus(cfg: PipelineConfig) -> AnnotationResult:
    """Run every stage in memory; nothing is written."""
    docs = corpus_io.read_jsonl_corpus(cfg.corpus)
    sentences = prepare_corpus(docs, cfg)
    lexicon = build_lexicon(cfg)
    matcher = compile_lexicon(lexicon, case_sensitive=cfg.case_sensitive)

    health = annotate_health(sentences, matcher, pos_filter=cfg.pos_filter, workers=cfg.workers)

    generic: dict = {}
    decisions: list = []
    skipped: Counter = Counter()
    if cfg.generic.spans is not None:
        kb, rules = None, []
        if cfg.generic.rules is not None:
            rules = load_rules(cfg.generic.rules)
            client = SparqlClient(resolve_endpoint(cfg.generic.endpoint), timeout=cfg.generic.timeout,
                                  cache_path=cfg.generic.cache, offline=cfg.generic.offline)
            kb = EntityLookup(client, cfg.generic.query)
        generic = annotate_generic(sentences, cfg.generic.spans, kb, rules, lenient=cfg.lenient,
                                   workers=cfg.workers, decisions=decisions, skipped=skipped)

    annotated = []
    dropped = 0
    for sent in sentences:
        h = health.get(sent.sent_id, [])
        g = generic.get(sent.sent_id, [])
        merged = harmonize(h, g, cfg.policy)
        dropped += len(h) + len(g) - len(merged)
        annotated.append(annotate_sentence(sent, merged))

    gold_n = sum(1 for e in lexicon.entries if e.provenance is Provenance.GOLD)
    stats = {
        "documents": len(docs),
        "sentences": len(sentences),
        "tokens": sum(len(s.tokens) for s in sentences),
        "lexicon": {
            "version": lexicon.version,
            "entries": len(lexicon),
            "gold": gold_n,
            "silver": len(lexicon) - gold_n,
            "conflicts": len(lexicon.conflicts),
            "collapsed_duplicates": lexicon.collapsed,
        },
        "health_spans": sum(len(v) for v in health.values()),
        "generic_spans": sum(len(v) for v in generic.values()),
        "generic_skipped": dict(sorted(skipped.items())),
        "generic_retyped": sum(1 for d in decisions if d.changed),
        "kb_misses": sum(1 for d in decisions if d.item_id == "MISS"),
        "dropped_in_harmonization": dropped,
        "entities": corpus_stats(annotated).to_dict(),
    }
    return AnnotationResult(annotated, stats)


def _write_outputs(result: AnnotationResult, cfg: PipelineConfig) -> None:
    targets = [cfg.conll_out, cfg.jsonl_out, cfg.report_out]
    temps = [t.with_name(t.name + ".partial") for t in targets]
    try:
        for t in targets:
            t.parent.mkdir(parents=True, exist_ok=True)
        corpus_io.write_conll([s.tokens for s in result.sentences if s.tokens],
                              [s.labels for s in result.sentences if s.tokens], temps[0])
        write_annotated_jsonl(result.sentences, temps[1])
        with open(temps[2], "w", encoding="utf-8", newline="\n") as fh:
            json.dump(result.stats, fh, indent=2)
            fh.write("\n")
        for tmp, final in zip(temps, targets):
            os.replace(tmp, final)
    except BaseException:
        for tmp in temps:
            tmp.unlink(missing_ok=True)
        raise


def run_annotate(cfg: PipelineConfig) -> AnnotationResult:
    cfg.validate()
    result = annotate_corpus(cfg)
    _write_outputs(result, cfg)
    return result


def run_fetch_seeds(cfg: PipelineConfig) -> SeedLexicon:
    cfg.validate(for_fetch=True)
    lexicon = SeedLexicon.from_entries(fetch_seeds(cfg))
    cfg.silver_seeds.parent.mkdir(parents=True, exist_ok=True)
    tmp = cfg.silver_seeds.with_name(cfg.silver_seeds.name + ".partial")
    try:
        write_lexicon(lexicon, tmp)
        os.replace(tmp, cfg.silver_seeds)
    finally:
        tmp.unlink(missing_ok=True)
    return lexicon


def _read_labelled(path, lenient):
    if not Path(path).is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        return corpus_io.read_conll(path, lenient=lenient)
    except CorpusFormatError as exc:
        msg = str(exc)
        raise ConfigError(msg if str(path) in msg else f"{path}: {msg}") from None


def run_evaluate(gold_path, pred_path, json_path=None, lenient: bool = False) -> EvalReport:
    """Score a predicted CoNLL file against a gold one, sentence by sentence."""
    gold_tokens, gold_labels = _read_labelled(gold_path, lenient)
    pred_tokens, pred_labels = _read_labelled(pred_path, lenient)
    if len(gold_tokens) != len(pred_tokens):
        raise ConfigError(f"sentence counts differ: {gold_path} has {len(gold_tokens)}, "
                          f"{pred_path} has {len(pred_tokens)}")
    line = 1
    for i, (g, p) in enumerate(zip(gold_tokens, pred_tokens)):
        if g != p:
            raise ConfigError(f"sentence {i} (gold line {line}) has different tokens in {pred_path}")
        line += len(g) + 1
    gold = {f"s{i}": bio_to_spans(labs) for i, labs in enumerate(gold_labels)}
    pred = {f"s{i}": bio_to_spans(labs) for i, labs in enumerate(pred_labels)}
    report = entity_f1(gold, pred)
    report.config = {"gold": str(gold_path), "pred": str(pred_path), "matching": "exact",
                     "scheme": "BIO", "lenient": lenient}
    if json_path is not None:
        report.write_json(json_path)
    return report


def load_labelled_spans(path) -> dict[str, list]:
    """Spans per sentence from an annotated JSONL file or a CoNLL file."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    if path.suffix == ".jsonl":
        return {s.sent_id: list(s.spans) for s in read_annotated_jsonl(path, DEFAULT_REGISTRY)}
    _, labels = corpus_io.read_conll(path)
    return {f"s{i}": bio_to_spans(labs) for i, labs in enumerate(labels)}


__all__ = [
    "PipelineConfig", "SilverFetchConfig", "GenericConfig", "load_config", "annotate_corpus",
    "run_annotate", "run_fetch_seeds", "run_evaluate", "load_labelled_spans",
]
