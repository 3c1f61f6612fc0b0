import math
import random

import pytest

from corona_ner.errors import EvaluationError
from corona_ner.evaluation import (AgreementTable, Score, aggregate_runs, corpus_stats, entity_f1,
                                   fleiss_kappa)
from oracles import brute_force_counts, random_flat_spans


def test_identical_is_perfect():
    gold = {"s0": [(0, 2, "GPE"), (3, 4, "ORG")]}
    micro = entity_f1(gold, gold).micro
    assert (micro.precision, micro.recall, micro.f1) == (1.0, 1.0, 1.0)


def test_hand_counted_case():
    report = entity_f1({"s0": [(0, 2, "GPE")]}, {"s0": [(0, 2, "GPE"), (3, 4, "ORG")]})
    m = report.micro
    assert (m.tp, m.fp, m.fn) == (1, 1, 0)
    assert m.precision == 0.5 and m.recall == 1.0
    assert m.f1 == pytest.approx(2 / 3, abs=1e-12)
    assert report.per_type["ORG"] == Score(0, 1, 0)
    assert report.support == {"GPE": 1, "ORG": 0}


def test_empty_prediction():
    m = entity_f1({"s0": [(0, 1, "GPE")]}, {"s0": []}).micro
    assert (m.precision, m.recall, m.f1) == (0.0, 0.0, 0.0)


def test_no_entities_at_all():
    report = entity_f1({}, {})
    assert report.micro.f1 == 0.0 and report.n_sentences == 0


def test_boundary_mismatch_counts_twice():
    m = entity_f1({"s0": [(0, 2, "GPE")]}, {"s0": [(0, 3, "GPE")]}).micro
    assert (m.tp, m.fp, m.fn) == (0, 1, 1)


def test_sentence_ids_must_agree():
    with pytest.raises(EvaluationError):
        entity_f1({"a": []}, {"b": []})


def _random_corpus(rng):
    types = ["GPE", "ORG", "CORONAVIRUS"]
    return {f"s{i}": random_flat_spans(rng, 12, types=types) for i in range(rng.randint(1, 6))}


def test_micro_matches_brute_force_and_symmetry():
    rng = random.Random(8)
    for _ in range(300):
        gold = _random_corpus(rng)
        pred = {sid: random_flat_spans(rng, 12, types=["GPE", "ORG", "CORONAVIRUS"]) if rng.random() < 0.5 else list(spans)
                for sid, spans in gold.items()}
        report = entity_f1(gold, pred)
        m = report.micro
        assert (m.tp, m.fp, m.fn) == brute_force_counts(gold, pred)
        assert m.tp == sum(s.tp for s in report.per_type.values())
        p, r = m.tp / (m.tp + m.fp) if m.tp + m.fp else 0.0, m.tp / (m.tp + m.fn) if m.tp + m.fn else 0.0
        assert m.f1 == pytest.approx(2 * p * r / (p + r) if p + r else 0.0, abs=1e-12)
        swapped = entity_f1(pred, gold).micro
        assert swapped.precision == m.recall and swapped.recall == m.precision
        assert swapped.f1 == pytest.approx(m.f1, abs=1e-15)


def test_report_render_and_json(tmp_path):
    report = entity_f1({"s0": [(0, 2, "GPE")]}, {"s0": [(0, 2, "GPE"), (3, 4, "ORG")]})
    text = report.render()
    assert "micro" in text and "GPE" in text and "0.6667" in text
    path = tmp_path / "r.json"
    report.write_json(path)
    import json
    data = json.loads(path.read_text())
    assert data["micro"]["precision"] == 0.5
    assert set(data) == {"n_sentences", "micro", "per_type", "support", "config"}


# -- kappa -------------------------------------------------------------------

def test_kappa_perfect_agreement_from_ratings():
    table = AgreementTable.from_ratings([["A", "B", "A", "B"], ["A", "B", "A", "B"]])
    assert table.counts == ((2, 0), (0, 2), (2, 0), (0, 2))
    assert fleiss_kappa(table) == 1.0


def test_kappa_examples():
    assert fleiss_kappa([[2, 0], [0, 2]]) == 1.0
    assert fleiss_kappa([[1, 1], [1, 1]]) == pytest.approx(-1.0, abs=1e-12)
    # all mass in one category with perfect agreement is 1.0 by convention
    assert fleiss_kappa([[3, 0], [3, 0]]) == 1.0


def test_kappa_reference_value():
    # Classic worked table (10 items, 14 raters, 5 categories); kappa ~= 0.210
    rows = [[0, 0, 0, 0, 14], [0, 2, 6, 4, 2], [0, 0, 3, 5, 6], [0, 3, 9, 2, 0], [2, 2, 8, 1, 1],
            [7, 7, 0, 0, 0], [3, 2, 6, 3, 0], [2, 5, 3, 2, 2], [6, 5, 2, 1, 0], [0, 2, 2, 3, 7]]
    n, big_n = 14, len(rows)
    p_i = [(sum(c * c for c in r) - n) / (n * (n - 1)) for r in rows]
    p_j = [sum(r[j] for r in rows) / (big_n * n) for j in range(5)]
    p_bar, p_e = sum(p_i) / big_n, sum(p * p for p in p_j)
    assert fleiss_kappa(rows) == pytest.approx((p_bar - p_e) / (1 - p_e), abs=1e-12)
    assert fleiss_kappa(rows) == pytest.approx(0.210, abs=1e-3)


def test_kappa_errors():
    with pytest.raises(EvaluationError, match="row 1"):
        fleiss_kappa([[2, 0], [1, 0]])
    with pytest.raises(EvaluationError):
        fleiss_kappa([])
    with pytest.raises(EvaluationError):
        fleiss_kappa([[1, 0], [0, 1]])
    with pytest.raises(EvaluationError):
        AgreementTable.from_ratings([["A"]])


def test_kappa_permutation_invariance():
    rng = random.Random(2)
    for _ in range(100):
        n, k = rng.randint(2, 5), rng.randint(2, 4)
        rows = []
        for _ in range(rng.randint(2, 8)):
            row = [0] * k
            for _ in range(n):
                row[rng.randrange(k)] += 1
            rows.append(row)
        try:
            base = fleiss_kappa(rows)
        except EvaluationError:
            continue
        shuffled = rng.sample(rows, len(rows))
        perm = rng.sample(range(k), k)
        assert fleiss_kappa(shuffled) == pytest.approx(base, abs=1e-12)
        assert fleiss_kappa([[r[j] for j in perm] for r in rows]) == pytest.approx(base, abs=1e-12)
        assert -1.0 - 1e-12 <= base <= 1.0 + 1e-12


# -- aggregation -------------------------------------------------------------

def test_aggregate_examples():
    assert aggregate_runs([0.5, 0.5, 0.5]).std == 0.0
    agg = aggregate_runs([0.70, 0.72])
    assert agg.mean == pytest.approx(0.71, abs=1e-12)
    assert agg.std == pytest.approx(0.0141421, abs=1e-6)
    single = aggregate_runs([0.9])
    assert (single.mean, single.std) == (0.9, 0.0)
    with pytest.raises(EvaluationError):
        aggregate_runs([])


def test_aggregate_matches_two_pass_reference():
    rng = random.Random(12)
    for _ in range(200):
        xs = [rng.random() for _ in range(rng.randint(2, 10))]
        mean = sum(xs) / len(xs)
        std = math.sqrt(sum((x - mean) ** 2 for x in xs) / (len(xs) - 1))
        agg = aggregate_runs(xs)
        assert agg.mean == pytest.approx(mean, rel=1e-12)
        assert agg.std == pytest.approx(std, rel=1e-12, abs=1e-15)


def test_corpus_stats():
    stats = corpus_stats({"a": [(0, 1, "GPE"), (2, 3, "GPE")], "b": [(0, 1, "GROUP")], "c": []})
    assert stats.per_type == {"GPE": 2, "GROUP": 1}
    assert (stats.total_entities, stats.total_sentences) == (3, 3)
