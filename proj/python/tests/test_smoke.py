import math

import pytest

import _memod as memod


def test_tokenize():
    assert memod.tokenize("Hello, World!") == ["hello", "world"]


def test_cosine_identity():
    v = [1.0, 2.0, 3.0]
    assert memod.cosine(v, v) == pytest.approx(1.0)
    assert memod.cosine([1.0, 0.0], [0.0, 1.0]) == pytest.approx(0.0)


def test_rouge_l():
    assert memod.rouge_l("the cat sat", "the cat sat") == pytest.approx(1.0)
    assert memod.rouge_l("alpha beta", "gamma delta") == 0.0


def test_bertscore_self():
    assert memod.bertscore_f1("one two three", "one two three") == pytest.approx(1.0)


def test_parse_round_trip():
    raw = memod.format_assistant("hateful", "targets a protected group", "counter it calmly")
    parsed = memod.parse_response(raw)
    assert parsed["label"] == "hateful"
    assert parsed["explanation"] == "targets a protected group"
    assert parsed["intervention"] == "counter it calmly"

    raw = memod.format_assistant("non-hateful", "benign joke", None)
    parsed = memod.parse_response(raw)
    assert parsed["label"] == "non-hateful"
    assert parsed["intervention"] is None


def test_classification_scores():
    acc, mf1 = memod.classification_scores(
        ["positive", "negative", "positive", "negative"],
        ["positive", "negative", "negative", "negative"],
    )
    assert acc == pytest.approx(0.75)
    assert 0.0 < mf1 <= 1.0


def test_top_k_order():
    pool = {"a": [1.0, 0.0], "b": [0.9, 0.1], "c": [0.0, 1.0]}
    shots = memod.top_k([1.0, 0.0], pool, 2)
    assert [s[0] for s in shots] == ["a", "b"]


def test_word_shift_hand_example():
    result = memod.word_shift(["a b"], ["a"])
    assert result["total_shift"] == pytest.approx(-math.log(2))


def test_perplexity_uniform():
    corpus = ["red green blue", "red green blue"]
    assert memod.unigram_perplexity("red green blue", corpus) == pytest.approx(3.0)


def test_confidence_interval():
    mean, half = memod.confidence_interval([1.0, 2.0, 3.0])
    assert mean == pytest.approx(2.0)
    assert half == pytest.approx(1.96 * 1.0 / math.sqrt(3))
