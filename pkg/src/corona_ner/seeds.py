"""Gold and silver seed lexicons: loading, normalization, merging and knowledge-base harvesting."""
from __future__ import annotations

import enum
import hashlib
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable, Mapping, Optional

from .corpus_io import DEFAULT_PUNCTUATION, tokenize
from .entities import DEFAULT_REGISTRY, TypeRegistry
from .errors import FetchError, LexiconError
from .kb import SparqlClient, binding_value, item_id

logger = logging.getLogger(__name__)

TSV_COLUMNS = ("surface", "entity_type", "provenance", "source")


class Provenance(enum.Enum):
    GOLD = "GOLD"
    SILVER = "SILVER"


def normalize_surface(surface: str, case_sensitive: bool = False,
                      punctuation=DEFAULT_PUNCTUATION) -> list[str]:
    """Tokenize with the corpus rules and case-fold; no stemming."""
    tokens = [t.text for t in tokenize(surface, punctuation)]
    if not tokens:
        raise LexiconError(f"surface {surface!r} normalizes to zero tokens")
    if case_sensitive:
        return tokens
    return [t.casefold() for t in tokens]


@dataclass(frozen=True)
class SeedEntry:
    surface: str
    norm_tokens: tuple[str, ...]
    entity_type: str
    provenance: Provenance
    source: str = ""

    @classmethod
    def create(cls, surface: str, entity_type: str, provenance: Provenance, source: str = "",
               registry: TypeRegistry = DEFAULT_REGISTRY) -> "SeedEntry":
        return cls(surface, tuple(normalize_surface(surface)), registry.canonical(entity_type),
                   provenance, source)

    @property
    def sort_key(self):
        return (self.norm_tokens, self.entity_type, self.provenance.value, self.surface, self.source)


@dataclass(frozen=True)
class LexiconConflict:
    norm_tokens: tuple[str, ...]
    dropped: SeedEntry
    kept_type: Optional[str]
    reason: str


@dataclass(frozen=True)
class SeedLexicon:
    """Resolved seed set; equality looks at entries only."""

    entries: frozenset
    version: str = field(default="", compare=False)
    created_at: str = field(default="", compare=False)
    conflicts: tuple = field(default=(), compare=False)
    collapsed: int = field(default=0, compare=False)

    def __len__(self):
        return len(self.entries)

    def __iter__(self):
        return iter(sorted(self.entries, key=lambda e: e.sort_key))

    @classmethod
    def empty(cls) -> "SeedLexicon":
        return cls.from_entries(())

    @classmethod
    def from_entries(cls, entries: Iterable[SeedEntry], version: Optional[str] = None) -> "SeedLexicon":
        """Resolve raw entries into a lexicon.

        Same tokens and type: one entry survives, GOLD before SILVER.
        Same tokens, different types: the GOLD type wins and other-typed SILVER
        entries are dropped; two GOLD types is an error; SILVER-only ambiguity
        drops all the ambiguous SILVER entries.
        """
        by_key: dict[tuple, list[SeedEntry]] = defaultdict(list)
        for e in entries:
            by_key[(e.norm_tokens, e.entity_type)].append(e)
        collapsed = 0
        chosen: dict[tuple, SeedEntry] = {}
        for key, group in by_key.items():
            group.sort(key=lambda e: (e.provenance is not Provenance.GOLD, e.surface, e.source))
            chosen[key] = group[0]
            collapsed += len(group) - 1

        by_tokens: dict[tuple, list[SeedEntry]] = defaultdict(list)
        for (tokens, _), e in chosen.items():
            by_tokens[tokens].append(e)
        kept, conflicts = [], []
        for tokens, group in by_tokens.items():
            if len(group) == 1:
                kept.append(group[0])
                continue
            gold = sorted(e.entity_type for e in group if e.provenance is Provenance.GOLD)
            if len(gold) > 1:
                raise LexiconError(
                    f"gold seeds disagree on {' '.join(tokens)!r}: {', '.join(gold)}")
            if gold:
                for e in group:
                    if e.provenance is Provenance.GOLD:
                        kept.append(e)
                    else:
                        conflicts.append(LexiconConflict(tokens, e, gold[0], "gold type wins"))
            else:
                for e in group:
                    conflicts.append(LexiconConflict(tokens, e, None, "ambiguous silver type"))
        conflicts.sort(key=lambda c: c.dropped.sort_key)
        if collapsed:
            logger.debug("collapsed %d duplicate seed entries", collapsed)
        for c in conflicts:
            logger.info("seed conflict on %r: dropped %s (%s)", " ".join(c.norm_tokens),
                        c.dropped.entity_type, c.reason)
        frozen = frozenset(kept)
        if version is None:
            digest = hashlib.sha256()
            for e in sorted(frozen, key=lambda e: e.sort_key):
                digest.update(repr(e.sort_key).encode("utf-8"))
            version = digest.hexdigest()[:12]
        return cls(frozen, version, datetime.now(timezone.utc).isoformat(timespec="seconds"),
                   tuple(conflicts), collapsed)


def load_lexicon(path, registry: TypeRegistry = DEFAULT_REGISTRY) -> SeedLexicon:
    """Read the seed TSV: surface, entity_type, provenance, source."""
    entries = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("#"):
                continue
            cols = line.split("\t")
            if not entries and [c.strip().lower() for c in cols[:2]] == list(TSV_COLUMNS[:2]):
                continue  # header row
            if len(cols) < 3:
                raise LexiconError(f"{path}: row {lineno}: expected at least surface, entity_type, provenance")
            surface = cols[0].strip()
            if not surface:
                raise LexiconError(f"{path}: row {lineno}: empty surface")
            etype = registry.canonical(cols[1].strip())
            try:
                prov = Provenance(cols[2].strip().upper())
            except ValueError:
                raise LexiconError(f"{path}: row {lineno}: provenance must be GOLD or SILVER") from None
            source = cols[3].strip() if len(cols) > 3 else ""
            try:
                norm = tuple(normalize_surface(surface))
            except LexiconError as exc:
                raise LexiconError(f"{path}: row {lineno}: {exc}") from None
            entries.append(SeedEntry(surface, norm, etype, prov, source))
    lexicon = SeedLexicon.from_entries(entries)
    if lexicon.collapsed:
        logger.warning("%s: collapsed %d duplicate seed rows", path, lexicon.collapsed)
    return lexicon


def write_lexicon(lexicon: Iterable[SeedEntry], path) -> None:
    rows = sorted(lexicon, key=lambda e: e.sort_key)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# " + "\t".join(TSV_COLUMNS) + "\n")
        for e in rows:
            cells = (e.surface, e.entity_type, e.provenance.value, e.source)
            if any(ch in c for c in cells for ch in "\t\r\n"):
                raise LexiconError(f"seed {e.surface!r} contains a tab or newline")
            fh.write("\t".join(cells) + "\n")


def merge_lexicons(a: SeedLexicon, b: SeedLexicon) -> SeedLexicon:
    """Union of two lexicons under the GOLD-over-SILVER resolution rules."""
    merged = SeedLexicon.from_entries(a.entries | b.entries)
    return SeedLexicon(merged.entries, merged.version, merged.created_at,
                       tuple(a.conflicts) + tuple(b.conflicts) + merged.conflicts,
                       a.collapsed + b.collapsed + merged.collapsed)


def fetch_silver_seeds(endpoint_url: str, type_query_map: Mapping[str, str], timeout: float = 30.0,
                       max_rows: int = 10000, cache_path=None, client: Optional[SparqlClient] = None,
                       registry: TypeRegistry = DEFAULT_REGISTRY) -> list[SeedEntry]:
    """Harvest SILVER seeds; each query must bind ``?item`` and ``?label`` (``?altLabel`` optional).

    Responses are cached per (endpoint, type, query hash); a warm cache means no requests.
    """
    if client is None:
        client = SparqlClient(endpoint_url, timeout=timeout, cache_path=cache_path)
    out = []
    seen = set()
    for type_name, query in type_query_map.items():
        etype = registry.canonical(type_name)
        rows = client.select(query, key=etype)
        if not rows:
            logger.warning("no silver seeds returned for %s from %s", etype, client.endpoint)
            continue
        if len(rows) > max_rows:
            logger.info("capping %s rows for %s at %d", len(rows), etype, max_rows)
            rows = rows[:max_rows]
        for row in rows:
            item = binding_value(row, "item")
            label = binding_value(row, "label")
            if not item or label is None:
                raise FetchError(client.endpoint, etype, "result row lacks ?item or ?label")
            for surface in (label, binding_value(row, "altLabel")):
                if not surface or not surface.strip():
                    continue
                try:
                    norm = tuple(normalize_surface(surface.strip()))
                except LexiconError:
                    continue
                if (norm, etype) in seen:
                    continue
                seen.add((norm, etype))
                out.append(SeedEntry(surface.strip(), norm, etype, Provenance.SILVER, item_id(item)))
    return out
