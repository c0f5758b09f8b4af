import pytest

from tlsum.text import (
    join_sentences, normalize_description, rouge_f1, split_sentences, tokenize, unigram_f1,
)


@pytest.mark.parametrize("text, toks", [
    ("The iPod, launched!", ["the", "ipod", "launched"]),
    ("", []),
    ("A-B c", ["a", "b", "c"]),
])
def test_tokenize(text, toks):
    assert tokenize(text) == toks


def test_tokenize_stopwords_off_by_default():
    assert tokenize("the cat") == ["the", "cat"]
    assert tokenize("the cat", remove_stopwords=True) == ["cat"]


def test_rouge_examples():
    assert rouge_f1("the cat sat".split(), "the cat ran".split(), 1) == pytest.approx(2 / 3, abs=1e-12)
    assert rouge_f1("a b c d".split(), "b c".split(), 2) == pytest.approx(0.5, abs=1e-12)
    assert rouge_f1(["x", "y"], ["x", "y"], 2) == 1.0
    assert rouge_f1([], ["x"], 1) == 0.0
    assert rouge_f1(["x"], ["x"], 2) == 0.0  # no bigrams on either side


def test_rouge_rejects_other_orders():
    with pytest.raises(ValueError):
        rouge_f1(["a"], ["a"], 3)


def test_rouge_clips_repeated_ngrams():
    # pred "a a a" vs ref "a": overlap 1, P = 1/3, R = 1
    assert rouge_f1(["a"] * 3, ["a"], 1) == pytest.approx(0.5)


def test_macintosh_descriptions_fuse_level_similarity():
    s = unigram_f1("unveiling of the macintosh computer", "unveiling of the macintosh personal computer")
    # 5 shared unigrams, lengths 5 and 6
    assert s == pytest.approx(2 * 5 / 11)
    assert s > 0.6


def test_sentence_helpers():
    assert split_sentences("One. Two!  Three?") == ["One.", "Two!", "Three?"]
    assert join_sentences(["a", "b."]) == "a. b."
    assert normalize_description("  The  Mac.  ") == "the mac"
