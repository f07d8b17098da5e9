import ctypes
import random
from collections import Counter

import pytest
from hypothesis import given
from hypothesis import strategies as st

from cswitch.corpus_model import CorpusKind
from cswitch.errors import IncompleteSheet, ParseError, SampleTooLarge
from cswitch.review import (
    ReviewRow,
    ReviewSheet,
    SplitMix64,
    Verdict,
    sample_for_review,
    sample_ids,
    score_review,
)

from conftest import corpus, rec, sent

# reference outputs for seed 1234567
REFERENCE = [
    6457827717110365317,
    3203168211198807973,
    9817491932198370423,
    4593380528125082431,
    16408922859458223821,
]


def ctypes_splitmix(seed, n):
    """Second implementation using fixed-width wraparound arithmetic."""
    u = ctypes.c_uint64
    state = u(seed)
    out = []
    for _ in range(n):
        state = u(state.value + 0x9E3779B97F4A7C15)
        z = state.value
        z = u((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9).value
        z = u((z ^ (z >> 27)) * 0x94D049BB133111EB).value
        out.append(z ^ (z >> 31))
    return out


def test_splitmix_reference_vector():
    r = SplitMix64(1234567)
    assert [r.next() for _ in range(5)] == REFERENCE


@given(st.integers(0, 2**64 - 1))
def test_splitmix_matches_fixed_width(seed):
    r = SplitMix64(seed)
    assert [r.next() for _ in range(4)] == ctypes_splitmix(seed, 4)


def test_below_rejection_bounds():
    r = SplitMix64(0)
    assert all(0 <= r.below(7) < 7 for _ in range(1000))
    with pytest.raises(ValueError):
        r.below(0)


def review_corpus(n, kind="miami"):
    if kind == "miami":
        ss = [sent(["spa", "eng"], sent_id=i) for i in range(n)]
        rs = [rec(i, "miami", topic="Casual_EverydayTalk", function="Narrative") for i in range(n)]
    else:
        ss = [sent(["spa", "gn"], sent_id=i) for i in range(n)]
        rs = [rec(i, "guaspa", secondary="Other", formality="Formal", genre="News", topic="Other") for i in range(n)]
    return corpus(kind, ss), rs


def test_sample_deterministic_and_sorted():
    c, rs = review_corpus(200)
    a = sample_for_review(rs, c, 30, seed=7)
    b = sample_for_review(list(reversed(rs)), c, 30, seed=7)
    assert a.to_csv() == b.to_csv()
    ids = [r.sent_id for r in a.rows]
    assert ids == sorted(ids) and len(set(ids)) == 30
    assert sample_for_review(rs, c, 30, seed=8).to_csv() != a.to_csv()


def test_sample_edges():
    c, rs = review_corpus(10)
    assert sample_for_review(rs, c, 0, 1).rows == ()
    assert {r.sent_id for r in sample_for_review(rs, c, 10, 1).rows} == set(range(10))
    with pytest.raises(SampleTooLarge):
        sample_for_review(rs, c, 11, 1)


def test_sample_ids_matches_written_algorithm():
    # re-derive from the documented steps with a fresh generator
    ids = [40, 10, 30, 20, 50]
    rng = SplitMix64(99)
    pool = sorted(ids)
    for i in range(3):
        bound = len(pool) - i
        while True:
            r = rng.next()
            if r >= (1 << 64) % bound:
                break
        j = i + r % bound
        pool[i], pool[j] = pool[j], pool[i]
    assert sample_ids(ids, 3, 99) == sorted(pool[:3])


def test_sample_uniform_chi_square():
    # 10 items, pick 3, 2000 seeds: each item expected 600 times
    counts = Counter()
    for seed in range(2000):
        counts.update(sample_ids(range(10), 3, seed))
    expected = 2000 * 3 / 10
    chi2 = sum((counts[i] - expected) ** 2 / expected for i in range(10))
    assert chi2 < 27.88  # chi-square 9 dof, p = 0.001


def sheet(kind, verdict_rows, labels=None):
    kind = CorpusKind.parse(kind)
    fields = ReviewSheet(kind, (), 0).fields
    rows = []
    for i, verdicts in enumerate(verdict_rows):
        lab = labels[i] if labels else {f: "x" for f in fields}
        rows.append(ReviewRow(i, f"s{i}", lab, {f: Verdict(v) for f, v in zip(fields, verdicts)}))
    return ReviewSheet(kind, tuple(rows), 0)


def test_score_guaspa_combined_113_of_120():
    rows = [["C", "C", "C", "C"] for _ in range(30)]
    for k in range(7):
        rows[k][k % 4] = "I"
    rep = score_review(sheet("guaspa", rows))
    assert (rep.combined.correct, rep.combined.total) == (113, 120)
    assert rep.combined.display() == "94.17"
    assert "combined[formality+genre+topic+secondary_topic] = 94.17% (113/120)" in rep.to_text()


def test_score_miami_secondary_18_of_30():
    rows = [["C", "C", "C" if i < 18 else "I"] for i in range(30)]
    rep = score_review(sheet("miami", rows))
    assert rep.per_field["topic"].display() == "100.00"
    assert rep.per_field["function"].display() == "100.00"
    assert rep.per_field["secondary_function"].display() == "60.00"
    assert rep.combined.display() == "100.00"


def test_score_secondary_denominators():
    labels = [{"topic": "a", "function": "b", "secondary_function": "c" if i < 10 else None} for i in range(30)]
    rows = [["C", "C", "C" if i < 6 else ("I" if i < 10 else "")] for i in range(30)]
    rep = score_review(sheet("miami", rows, labels))
    assert rep.per_field["secondary_function"].display() == "60.00"
    assert rep.secondary_over_rows["secondary_function"].display() == "20.00"


def test_score_all_incorrect_and_incomplete():
    assert score_review(sheet("miami", [["I", "I", "I"]] * 3)).combined.display() == "0.00"
    with pytest.raises(IncompleteSheet) as info:
        score_review(sheet("miami", [["C", "C", "C"], ["C", "", "C"]]))
    assert info.value.unset == [1]


@given(st.lists(st.tuples(*[st.sampled_from("CI")] * 4), min_size=1, max_size=20), st.randoms())
def test_score_invariant_under_row_order(rows, rnd):
    a = score_review(sheet("guaspa", rows))
    shuffled = list(rows)
    rnd.shuffle(shuffled)
    assert score_review(sheet("guaspa", shuffled)) == a


def test_csv_round_trip():
    c, rs = review_corpus(40, "guaspa")
    s = sample_for_review(rs, c, 5, seed=3)
    assert s.to_csv().splitlines()[0] == (
        "sent_id,sentence,formality,genre,topic,secondary_topic,"
        "formality_verdict,genre_verdict,topic_verdict,secondary_topic_verdict"
    )
    filled = s.to_csv().replace(",,,,\n", ",C,c,I,C\n")
    again = ReviewSheet.from_csv(filled, "guaspa", seed=3)
    assert [r.sent_id for r in again.rows] == [r.sent_id for r in s.rows]
    assert again.rows[0].verdict("topic") is Verdict.INCORRECT
    assert again.rows[0].labels["secondary_topic"] == "Other"


def test_csv_rejects_bad_verdict_and_columns():
    with pytest.raises(ParseError):
        ReviewSheet.from_csv("sent_id,sentence\n1,x\n", "miami")
    header = "sent_id,sentence,topic,function,secondary_function,topic_verdict,function_verdict,secondary_function_verdict\n"
    with pytest.raises(ParseError):
        ReviewSheet.from_csv(header + "1,x,a,b,,maybe,C,\n", "miami")


def test_unicode_sentences_survive_csv():
    s = ReviewSheet(CorpusKind.GUASPA, (ReviewRow(1, 'ñandutí, "che" 😀', {}),), 0)
    assert ReviewSheet.from_csv(s.to_csv(), "guaspa").rows[0].text == 'ñandutí, "che" 😀'


def test_random_sheets_percent_bounds():
    rng = random.Random(5)
    for _ in range(50):
        rows = [[rng.choice("CI") for _ in range(4)] for _ in range(rng.randint(1, 30))]
        rep = score_review(sheet("guaspa", rows))
        assert 0.0 <= rep.combined.percent <= 100.0
