import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bidecode.evaluation import bleu, bleu_files, tokenize_13a


def hand_example():
    hyps = ["the cat sat on the mat", "a dog"]
    refs = ["the cat is on the mat", "a dog runs"]
    # Clipped matches / totals: 1-gram 7/8, 2-gram 4/6, 3-gram 1/4, 4-gram 0/3
    # (smoothed to 1/(2*3)); hypothesis length 8, reference length 9.
    p = [7 / 8, 4 / 6, 1 / 4, 1 / 6]
    expected = 100 * math.exp(1 - 9 / 8) * math.exp(sum(math.log(v) for v in p) / 4)
    return hyps, refs, expected


def test_identical_is_exactly_100():
    refs = ["The patient was treated .", "Cells divide every 24 hours, roughly."]
    assert bleu(refs, refs).score == 100.0


def test_disjoint_is_small_but_positive():
    hyp = " ".join(f"h{i}" for i in range(30))
    ref = " ".join(f"r{i}" for i in range(30))
    r = bleu([hyp], [ref])
    assert 0 < r.score < 1.0
    assert r.counts == [0, 0, 0, 0]
    # Smoothing is relative to the n-gram totals, so very short disjoint
    # lines can still score above 1.
    assert bleu(["a b c d e"], ["v w x y z"]).score > 1.0


def test_hand_example():
    hyps, refs, expected = hand_example()
    r = bleu(hyps, refs)
    assert r.counts == [7, 4, 1, 0] and r.totals == [8, 6, 4, 3]
    assert (r.hyp_len, r.ref_len) == (8, 9)
    assert abs(r.score - expected) <= 1e-6


def test_case_modes():
    hyps = ["The Cat sat on the mat", "A dog"]
    refs = ["the cat is on the mat", "a dog runs"]
    assert bleu(hyps, refs, cased=False).score == bleu([h.lower() for h in hyps], refs).score
    assert bleu(hyps, refs, cased=True).score < bleu(hyps, refs, cased=False).score


def test_no_smoothing_zero():
    assert bleu(["a b c d e"], ["a b c x y"], smooth="none").score == 0.0


def test_errors():
    with pytest.raises(ValueError):
        bleu(["a"], ["a", "b"])
    with pytest.raises(ValueError):
        bleu([], [])
    with pytest.raises(ValueError):
        bleu(["a"], ["a"], smooth="floor")


def test_empty_hypothesis_scores_zero():
    r = bleu([""], ["a b c d"])
    assert r.score == 0.0 and r.bp == 0.0


def test_short_corpus_uses_available_orders():
    assert bleu(["a b"], ["a b"]).score == 100.0
    assert bleu(["a"], ["a"]).score == 100.0


def test_tokenize_13a():
    assert tokenize_13a("Hello, world. It costs $3.50!") == \
        ["Hello", ",", "world", ".", "It", "costs", "$", "3.50", "!"]
    assert tokenize_13a("a &amp; b") == ["a", "&", "b"]
    assert tokenize_13a("1,000 and 1-2") == ["1,000", "and", "1", "-", "2"]


def test_bleu_files(tmp_path):
    hyps, refs, expected = hand_example()
    (tmp_path / "h").write_text("\n".join(hyps) + "\n")
    (tmp_path / "r").write_text("\n".join(refs) + "\n")
    assert abs(bleu_files(tmp_path / "h", tmp_path / "r").score - expected) <= 1e-6


def test_to_json_round_trip():
    import json
    r = bleu(*hand_example()[:2])
    assert json.loads(r.to_json())["counts"] == [7, 4, 1, 0]


sentences = st.lists(st.sampled_from("a b c d e f g , .".split()), min_size=1, max_size=12).map(" ".join)


@settings(max_examples=1000, deadline=None)
@given(st.lists(sentences, min_size=1, max_size=5))
def test_self_bleu_is_100(refs):
    assert bleu(refs, refs).score == 100.0


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.tuples(sentences, sentences), min_size=1, max_size=5))
def test_score_range_and_lowercase_modes(pairs):
    hyps, refs = [p[0] for p in pairs], [p[1] for p in pairs]
    r = bleu(hyps, refs)
    assert 0 <= r.score <= 100
    assert bleu(hyps, refs, cased=False).score == r.score


@settings(max_examples=1000, deadline=None)
@given(st.lists(st.tuples(sentences, st.integers(0, 11)), min_size=1, max_size=5))
def test_brevity_monotone(pairs):
    refs = [p[0] for p in pairs]
    full = bleu(refs, refs)
    cut = [" ".join(r.split()[: min(k, len(r.split()))]) for r, k in pairs]
    shorter = [" ".join(c.split()[:-1]) for c in cut]
    bp_cut, bp_short = bleu(cut, refs).bp, bleu(shorter, refs).bp
    assert bp_short <= bp_cut <= full.bp == 1.0
