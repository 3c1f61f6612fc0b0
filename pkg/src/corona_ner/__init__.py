"""Distant-supervision annotation of corona news: seed lexicons, tagger spans, harmonization, scoring."""
from .corpus_io import (Document, Sentence, Token, clean_text, read_conll, read_jsonl_corpus,
                        segment_sentences, tokenize, write_conll, write_jsonl_corpus)
from .entities import DEFAULT_REGISTRY, EntityKind, EntitySpan, EntityType, SpanSource, TypeRegistry
from .evaluation import AgreementTable, EvalReport, aggregate_runs, corpus_stats, entity_f1, fleiss_kappa
from .gazetteer import CompiledMatcher, annotate_health, compile_lexicon, match_sentence
from .generic import (EntityLookup, RefinementRule, annotate_generic, load_generic_spans, load_rules,
                      refine_span)
from .harmonizer import HarmonizationPolicy, bio_to_spans, harmonize, spans_to_bio
from .seeds import (Provenance, SeedEntry, SeedLexicon, fetch_silver_seeds, load_lexicon, merge_lexicons,
                    normalize_surface)

__version__ = "0.1.0"
