"""Command-line entry point: ``corona-ner {annotate,fetch-seeds,evaluate,stats}``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from .errors import AnnotationError, ConfigError
from .evaluation import corpus_stats
from .pipeline import load_config, load_labelled_spans, run_annotate, run_evaluate, run_fetch_seeds

EXIT_OK, EXIT_FAILURE, EXIT_USAGE = 0, 1, 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="corona-ner", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate", help="run the annotation pipeline")
    p.add_argument("--config", required=True)
    p.add_argument("--strict", action="store_true", help="reject bad generic span records instead of skipping")
    p.add_argument("--case-sensitive", action="store_true")
    p.add_argument("--pos-filter", action="store_true", help="keep only seed matches covering a noun")
    p.add_argument("--workers", type=int, default=None)

    p = sub.add_parser("fetch-seeds", help="harvest silver seeds over SPARQL into the seeds.silver TSV")
    p.add_argument("--config", required=True)

    p = sub.add_parser("evaluate", help="entity-level P/R/F1 of a predicted CoNLL file")
    p.add_argument("--gold", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--json", dest="json_path")
    p.add_argument("--lenient", action="store_true", help="repair invalid I- transitions instead of failing")

    p = sub.add_parser("stats", help="entity counts of an annotated JSONL or CoNLL file")
    p.add_argument("--input", required=True)
    p.add_argument("--json", action="store_true", help="print JSON instead of a table")
    return parser


def _annotate(args) -> int:
    overrides = {
        "lenient": False if args.strict else None,
        "case_sensitive": True if args.case_sensitive else None,
        "pos_filter": True if args.pos_filter else None,
        "workers": args.workers,
    }
    cfg = load_config(args.config, **overrides)
    result = run_annotate(cfg)
    s = result.stats
    print(f"annotated {s['sentences']} sentences from {s['documents']} documents: "
          f"{s['entities']['total_entities']} entities "
          f"({s['health_spans']} health, {s['generic_spans']} generic, "
          f"{s['dropped_in_harmonization']} dropped in harmonization)")
    print(f"wrote {cfg.conll_out}, {cfg.jsonl_out}, {cfg.report_out}")
    return EXIT_OK


def _fetch(args) -> int:
    cfg = load_config(args.config)
    lexicon = run_fetch_seeds(cfg)
    print(f"wrote {len(lexicon)} silver seeds to {cfg.silver_seeds}")
    return EXIT_OK


def _evaluate(args) -> int:
    report = run_evaluate(args.gold, args.pred, args.json_path, lenient=args.lenient)
    print(report.render())
    return EXIT_OK


def _stats(args) -> int:
    stats = corpus_stats(load_labelled_spans(args.input))
    if args.json:
        print(json.dumps(stats.to_dict(), indent=2))
    else:
        for etype, count in sorted(stats.per_type.items()):
            print(f"{etype:<20} {count:7d}")
        print(f"{'total entities':<20} {stats.total_entities:7d}")
        print(f"{'sentences':<20} {stats.total_sentences:7d}")
    return EXIT_OK


COMMANDS = {"annotate": _annotate, "fetch-seeds": _fetch, "evaluate": _evaluate, "stats": _stats}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (AnnotationError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
