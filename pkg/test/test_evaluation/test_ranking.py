import numpy as np
import pytest

from bilexical.BilinearModel import BilinearModel, factorize
from bilexical.errors import DegenerateVector, UnknownWord
from bilexical.Evaluator import query_neighbors, top_candidates
from bilexical.Representation import Representation, Vocabulary


def _rep(matrix, words):
    return Representation(Vocabulary(tuple(words)), np.asarray(matrix, dtype=float))


def test_identity_ranks_by_inner_product(make_features):
    features = make_features(12)
    model = BilinearModel.dense(np.eye(5))
    query = features.query_words[0]
    scores = features.C @ features.query_rep.vector(query)
    expected = [features.candidate_words[i] for i in np.argsort(-scores)[:3]]
    assert [c for c, _ in top_candidates(model, query, 3, features)] == expected


def test_top_k_beyond_candidate_set(make_features):
    features = make_features(12)
    ranked = top_candidates(BilinearModel.dense(np.eye(5)), features.query_words[0], 100, features)
    assert sorted(c for c, _ in ranked) == sorted(features.candidate_words)


def test_ties_are_lexicographic(make_features):
    features = make_features(12)
    ranked = top_candidates(BilinearModel.dense(np.zeros((5, 5))), features.query_words[0], 3, features)
    assert [c for c, _ in ranked] == sorted(features.candidate_words)[:3]


def test_unknown_query(make_features):
    with pytest.raises(UnknownWord):
        top_candidates(BilinearModel.dense(np.eye(5)), "nope", 3, make_features(12))


def test_ranking_agrees_with_distribution(make_features, rng):
    features = make_features(13)
    model = factorize(rng.standard_normal((5, 5)))
    query = features.query_words[1]
    probs = model.distribution(features.query_rep.vector(query), features.C)
    by_prob = [features.candidate_words[i] for i in np.argsort(-probs, kind="stable")]
    assert [c for c, _ in top_candidates(model, query, len(probs), features)] == by_prob


def test_duplicate_vector_is_top_neighbor():
    emb = _rep([[1.0, 2.0], [1.0, 2.0], [2.0, -1.0]], ["a", "b", "c"])
    (word, cos), *_ = query_neighbors(emb, "a", 2)
    assert word == "b" and cos == pytest.approx(1.0)


def test_orthogonal_neighbors_fall_back_to_lexicographic():
    emb = _rep(np.eye(4), ["d", "b", "c", "a"])
    neighbors = query_neighbors(emb, "d", 3)
    assert [w for w, _ in neighbors] == ["a", "b", "c"]
    assert all(cos == 0.0 for _, cos in neighbors)


def test_zero_vector():
    emb = _rep([[0.0, 0.0], [1.0, 0.0], [0.0, 0.0]], ["a", "b", "c"])
    with pytest.raises(DegenerateVector):
        query_neighbors(emb, "a", 1)
    assert [w for w, _ in query_neighbors(emb, "b", 5)] == []


def test_neighbors_depend_on_relation(rng):
    words = [f"q{i}" for i in range(12)]
    rep = _rep(rng.standard_normal((12, 8)), words)
    first = factorize(rng.standard_normal((8, 2)) @ rng.standard_normal((2, 8)))
    second = factorize(rng.standard_normal((8, 2)) @ rng.standard_normal((2, 8)))
    top_a = {w for w, _ in query_neighbors(first.export_embeddings("query", rep), "q0", 5)}
    top_b = {w for w, _ in query_neighbors(second.export_embeddings("query", rep), "q0", 5)}
    assert len(top_a & top_b) / len(top_a | top_b) < 1.0
