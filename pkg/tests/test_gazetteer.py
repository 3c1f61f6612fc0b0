import random

import pytest

from corona_ner.entities import SpanSource
from corona_ner.gazetteer import CompiledMatcher, Payload, annotate_health, compile_lexicon, match_sentence
from corona_ner.seeds import Provenance, SeedEntry, SeedLexicon
from conftest import sentence
from oracles import brute_force_match, random_seed_rows, random_words


def lexicon(*rows):
    return SeedLexicon.from_entries(
        SeedEntry.create(s, t, Provenance(p) if isinstance(p, str) else p) for s, t, p in rows)


def triples(spans):
    return [(s.start, s.end, s.entity_type) for s in spans]


def test_single_hit_case_folded():
    m = compile_lexicon(lexicon(("corona", "CORONAVIRUS", "GOLD")))
    spans = match_sentence(m, sentence(["The", "Corona", "pandemic"]))
    assert triples(spans) == [(1, 2, "CORONAVIRUS")]
    assert spans[0].source is SpanSource.GOLD_SEED and spans[0].score == 1.0


def test_longest_match_wins():
    m = compile_lexicon(lexicon(("loss", "SIGN_OR_SYMPTOM", "GOLD"),
                                ("loss of taste", "SIGN_OR_SYMPTOM", "GOLD")))
    assert triples(match_sentence(m, sentence(["sudden", "loss", "of", "taste"]))) == [(1, 4, "SIGN_OR_SYMPTOM")]
    # the long pattern fails, so the short one still applies
    assert triples(match_sentence(m, sentence(["loss", "of", "smell"]))) == [(0, 1, "SIGN_OR_SYMPTOM")]


def test_empty_inputs():
    m = compile_lexicon(lexicon(("corona", "CORONAVIRUS", "GOLD")))
    assert match_sentence(m, sentence([])) == []
    empty = compile_lexicon(SeedLexicon.empty())
    assert len(empty) == 0
    assert match_sentence(empty, sentence(["corona"])) == []


def test_compile_accepts_exactly_lexicon():
    m = compile_lexicon(lexicon(("delta variant", "CORONAVIRUS", "GOLD")))
    assert m.lookup(["delta", "variant"]) == Payload("CORONAVIRUS", Provenance.GOLD, "")
    assert m.lookup(["delta"]) is None
    assert m.max_pattern_len == 2


def test_compile_10k_entries_replay():
    rng = random.Random(3)
    words = [f"w{i}" for i in range(300)]
    surfaces = {" ".join(rng.choice(words) for _ in range(rng.randint(1, 5))) for _ in range(10_000)}
    lex = SeedLexicon.from_entries(
        SeedEntry.create(s, rng.choice(["CORONAVIRUS", "GPE", "GROUP"]), Provenance.GOLD) for s in surfaces)
    m = compile_lexicon(lex)
    assert len(m) == len(lex)
    for e in lex:
        assert m.lookup(e.norm_tokens) == Payload(e.entity_type, e.provenance, e.source)
    # nothing outside the lexicon is accepted: every accepting node maps back to an entry
    accepted = set()
    stack = [(0, ())]
    while stack:
        node, path = stack.pop()
        if node in m.payloads:
            accepted.add(path)
        stack.extend((child, path + (tok,)) for tok, child in m.children[node].items())
    assert accepted == {e.norm_tokens for e in lex}


def test_gold_beats_silver_on_identical_tokens():
    m = CompiledMatcher()
    m.add(("corona",), Payload("GPE", Provenance.SILVER, "Q1"))
    m.add(("corona",), Payload("CORONAVIRUS", Provenance.GOLD, "experts"))
    m.add(("corona",), Payload("ORG", Provenance.SILVER, "Q2"))
    (span,) = match_sentence(m, sentence(["corona"]))
    assert (span.entity_type, span.source) == ("CORONAVIRUS", SpanSource.GOLD_SEED)


def test_leftmost_wins_over_longer_later_match():
    m = compile_lexicon(lexicon(("a b", "GPE", "GOLD"), ("b c d", "ORG", "GOLD")))
    assert triples(match_sentence(m, sentence(["a", "b", "c", "d"]))) == [(0, 2, "GPE")]


def test_token_boundaries():
    m = compile_lexicon(lexicon(("corona", "CORONAVIRUS", "GOLD")))
    assert match_sentence(m, sentence(["Coronavirus", "spreads"])) == []


def test_case_sensitive_mode():
    lex = lexicon(("Corona", "CORONAVIRUS", "GOLD"))
    strict = compile_lexicon(lex, case_sensitive=True)
    assert match_sentence(strict, sentence(["corona"])) == []
    assert triples(match_sentence(strict, sentence(["Corona"]))) == [(0, 1, "CORONAVIRUS")]


def test_pos_filter():
    m = compile_lexicon(lexicon(("long", "GPE", "GOLD"), ("long covid", "DISEASE_OR_SYNDROME", "GOLD")))
    s = sentence(["long", "covid", "long"], pos=["ADJ", "NOUN", "ADJ"])
    assert triples(match_sentence(m, s, pos_filter=True)) == [(0, 2, "DISEASE_OR_SYNDROME")]
    s = sentence(["long", "covid"], pos=["JJ", "VB"])
    assert match_sentence(m, s, pos_filter=True) == []
    assert triples(match_sentence(m, s)) == [(0, 2, "DISEASE_OR_SYNDROME")]


def _oracle_entries(lex):
    return [(e.norm_tokens, e.entity_type, e.provenance.value) for e in lex]


@pytest.mark.parametrize("seed", range(5))
def test_oracle_equivalence_random(seed):
    rng = random.Random(seed)
    for _ in range(100):
        lex = lexicon(*random_seed_rows(rng))
        m = compile_lexicon(lex)
        words = random_words(rng)
        got = [(s.start, s.end, s.entity_type,
                "GOLD" if s.source is SpanSource.GOLD_SEED else "SILVER")
               for s in match_sentence(m, sentence(words))]
        assert got == brute_force_match(_oracle_entries(lex), words)


def test_case_invariance_of_sentence():
    rng = random.Random(11)
    for _ in range(50):
        lex = lexicon(*random_seed_rows(rng))
        m = compile_lexicon(lex)
        words = random_words(rng)
        a = triples(match_sentence(m, sentence(words)))
        assert a == triples(match_sentence(m, sentence([w.upper() for w in words])))
        assert a == triples(match_sentence(m, sentence([w.lower() for w in words])))


def test_spans_sorted_non_overlapping():
    rng = random.Random(5)
    for _ in range(100):
        m = compile_lexicon(lexicon(*random_seed_rows(rng)))
        words = random_words(rng)
        spans = match_sentence(m, sentence(words))
        for a, b in zip(spans, spans[1:]):
            assert a.end <= b.start
        assert all(0 <= s.start < s.end <= len(words) for s in spans)


def test_annotate_health_matches_per_sentence_loop():
    rng = random.Random(9)
    lex = lexicon(*random_seed_rows(rng))
    m = compile_lexicon(lex)
    corpus = [sentence(random_words(rng), sent_id=f"d{d}:{i}") for d in range(3) for i in range(10)]
    expected = {s.sent_id: match_sentence(m, s) for s in corpus}
    serial = annotate_health(corpus, m)
    parallel = annotate_health(corpus, m, workers=4)
    assert serial == expected == parallel
    assert list(serial) == [s.sent_id for s in corpus]


def test_annotate_health_keeps_empty_keys():
    m = compile_lexicon(lexicon(("corona", "CORONAVIRUS", "GOLD")))
    out = annotate_health([sentence(["nothing"], "a:0"), sentence(["here"], "a:1")], m)
    assert out == {"a:0": [], "a:1": []}


def test_one_sentence_corpus():
    m = compile_lexicon(lexicon(("corona", "CORONAVIRUS", "GOLD")))
    out = annotate_health([sentence(["Corona", "now"], "a:0")], m)
    assert triples(out["a:0"]) == [(0, 1, "CORONAVIRUS")]
