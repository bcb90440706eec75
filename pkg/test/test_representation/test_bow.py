import math

import numpy as np
import pytest

from bilexical.errors import DataWarning, EmptyCorpus, InvalidArgument, UnknownWord
from bilexical.Representation import BowConfig, Vocabulary, build_bow, build_vocab, read_corpus


def test_build_vocab_first_occurrence_order():
    vocab = build_vocab(["a", "b", "a"])
    assert vocab.words == ("a", "b")
    assert vocab.position("b") == 1


def test_build_vocab_singleton():
    vocab = build_vocab(["x"])
    assert vocab.words == ("x",)
    assert len(vocab) == 1


def test_build_vocab_empty_stream():
    with pytest.raises(EmptyCorpus):
        build_vocab([])


def test_vocabulary_rejects_duplicates():
    with pytest.raises(InvalidArgument):
        Vocabulary(("a", "a"))


def test_unknown_word_lookup():
    rep = build_bow([["a", "b"]], BowConfig(window=1, dim=2))
    with pytest.raises(UnknownWord):
        rep.vector("zzz")


def test_bow_counts_window_of_one():
    rep = build_bow([["a", "b", "a"]], BowConfig(window=1, dim=2))
    assert rep.context_labels == ("a", "b")
    np.testing.assert_array_equal(rep.vector("a"), [0.0, 2.0])
    np.testing.assert_array_equal(rep.vector("b"), [2.0, 0.0])


def test_bow_single_token_has_zero_vector():
    rep = build_bow([["a"]], BowConfig(window=1, dim=1))
    np.testing.assert_array_equal(rep.vector("a"), [0.0])


def test_bow_log1p_weighting():
    rep = build_bow([["a", "b"]], BowConfig(window=1, dim=2, weighting="log1p"))
    np.testing.assert_allclose(rep.vector("a"), [0.0, math.log(2.0)])


def test_bow_windows_do_not_cross_sentences():
    rep = build_bow([["a", "b"], ["c", "d"]], BowConfig(window=5, dim=4))
    assert rep.vector("b")[rep.context_labels.index("c")] == 0.0


def test_bow_truncated_dimension_is_recorded():
    with pytest.warns(DataWarning):
        rep = build_bow([["a", "b", "c"]], BowConfig(window=1, dim=10))
    assert rep.dim == 3
    assert rep.warnings and "truncated" in rep.warnings[0]


def test_bow_context_ties_broken_lexicographically():
    rep = build_bow([["z", "y", "x"]], BowConfig(window=2, dim=2))
    assert rep.context_labels == ("x", "y")


def test_bow_is_invariant_to_sentence_order(rng):
    words = list("abcdefg")
    corpus = [[words[i] for i in rng.integers(0, len(words), size=8)] for _ in range(20)]
    cfg = BowConfig(window=2, dim=5)
    a = build_bow(corpus, cfg)
    b = build_bow(corpus[::-1], cfg)
    assert a.context_labels == b.context_labels
    for w in words:
        if w in a:
            np.testing.assert_array_equal(a.vector(w), b.vector(w))


def test_raw_counts_are_non_negative_integers(rng):
    corpus = [[str(t) for t in rng.integers(0, 12, size=10)] for _ in range(15)]
    dense = build_bow(corpus, BowConfig(window=3, dim=6)).dense()
    assert np.all(dense >= 0)
    np.testing.assert_array_equal(dense, np.round(dense))


def test_sparse_and_dense_lookups_agree(rng):
    corpus = [[str(t) for t in rng.integers(0, 9, size=7)] for _ in range(10)]
    rep = build_bow(corpus, BowConfig(window=2, dim=5))
    assert rep.is_sparse
    dense = rep.dense()
    for i, w in enumerate(rep.vocab.words):
        np.testing.assert_array_equal(rep.vector(w), dense[i])


def test_config_validation():
    with pytest.raises(InvalidArgument):
        BowConfig(window=0)
    with pytest.raises(InvalidArgument):
        BowConfig(dim=0)
    with pytest.raises(InvalidArgument):
        BowConfig(weighting="ppmi")


def test_read_corpus_skips_blank_lines(tmp_path):
    path = tmp_path / "corpus.txt"
    path.write_text("the red car\n\n  the old house \n", encoding="utf-8")
    assert read_corpus(path) == [["the", "red", "car"], ["the", "old", "house"]]
