"""Token-level multi-pattern matching of seed lexicons over sentences."""
from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

from .corpus_io import Sentence
from .entities import EntitySpan, SpanSource
from .seeds import Provenance, SeedLexicon, normalize_surface

logger = logging.getLogger(__name__)

_PROVENANCE_RANK = {Provenance.GOLD: 0, Provenance.SILVER: 1}
_SOURCE = {Provenance.GOLD: SpanSource.GOLD_SEED, Provenance.SILVER: SpanSource.SILVER_SEED}
NOUN_TAGS = frozenset({"NOUN", "PROPN"})


@dataclass(frozen=True)
class Payload:
    entity_type: str
    provenance: Provenance
    source: str

    @property
    def rank(self):
        return (_PROVENANCE_RANK[self.provenance], self.entity_type, self.source)


def is_noun(pos: Optional[str]) -> bool:
    return pos is not None and (pos in NOUN_TAGS or pos.startswith("NN"))


class CompiledMatcher:
    """Prefix tree over normalized token sequences.

    Node 0 is the root; ``children[node]`` maps a token to the next node and
    ``payloads`` holds the entity attached to accepting nodes.
    """

    def __init__(self, case_sensitive: bool = False):
        self.case_sensitive = case_sensitive
        self.children: list[dict[str, int]] = [{}]
        self.payloads: dict[int, Payload] = {}
        self.max_pattern_len = 0

    def __len__(self):
        return len(self.payloads)

    def normalize_token(self, token: str) -> str:
        return token if self.case_sensitive else token.casefold()

    def add(self, tokens: Sequence[str], payload: Payload) -> None:
        node = 0
        for tok in tokens:
            nxt = self.children[node].get(tok)
            if nxt is None:
                nxt = len(self.children)
                self.children.append({})
                self.children[node][tok] = nxt
            node = nxt
        current = self.payloads.get(node)
        if current is None or payload.rank < current.rank:
            self.payloads[node] = payload
        self.max_pattern_len = max(self.max_pattern_len, len(tokens))

    def lookup(self, tokens: Sequence[str]) -> Optional[Payload]:
        """Payload for an exact (already normalized) token sequence, if any."""
        node = 0
        for tok in tokens:
            node = self.children[node].get(tok)
            if node is None:
                return None
        return self.payloads.get(node)

    def longest_at(self, norm: Sequence[str], start: int, accept=None) -> Optional[tuple[int, Payload]]:
        node = 0
        best = None
        for i in range(start, len(norm)):
            node = self.children[node].get(norm[i])
            if node is None:
                break
            payload = self.payloads.get(node)
            if payload is not None and (accept is None or accept(start, i + 1)):
                best = (i + 1, payload)
        return best


def compile_lexicon(lexicon: SeedLexicon, case_sensitive: bool = False) -> CompiledMatcher:
    matcher = CompiledMatcher(case_sensitive)
    for entry in lexicon:  # sorted iteration keeps compilation deterministic
        tokens = normalize_surface(entry.surface, case_sensitive=True) if case_sensitive else entry.norm_tokens
        matcher.add(tokens, Payload(entry.entity_type, entry.provenance, entry.source))
    if not len(matcher):
        logger.warning("compiled an empty seed lexicon; no health spans will be produced")
    return matcher


def match_sentence(matcher: CompiledMatcher, sentence: Sentence, pos_filter: bool = False) -> list[EntitySpan]:
    """Leftmost-longest, non-overlapping seed matches over one sentence.

    Ties at equal start and length go to GOLD. With ``pos_filter`` a match must
    cover at least one noun or proper-noun token.
    """
    norm = [matcher.normalize_token(t.text) for t in sentence.tokens]
    accept = None
    if pos_filter:
        nouns = [is_noun(t.pos) for t in sentence.tokens]
        accept = lambda s, e: any(nouns[s:e])  # noqa: E731
    spans = []
    i = 0
    while i < len(norm):
        hit = matcher.longest_at(norm, i, accept)
        if hit is None:
            i += 1
            continue
        end, payload = hit
        spans.append(EntitySpan(sentence.sent_id, i, end, payload.entity_type,
                                _SOURCE[payload.provenance], 1.0))
        i = end
    return spans


def annotate_health(corpus: Iterable[Sentence], matcher: CompiledMatcher, pos_filter: bool = False,
                    workers: int = 1) -> dict[str, list[EntitySpan]]:
    sentences = list(corpus)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(lambda s: match_sentence(matcher, s, pos_filter), sentences))
    else:
        results = [match_sentence(matcher, s, pos_filter) for s in sentences]
    return {s.sent_id: spans for s, spans in zip(sentences, results)}
