import numpy as np
import pytest

from bilexical.BilinearModel import BilinearModel, factorize, truncate
from bilexical.errors import DimensionError, RepresentationMismatch, RequiresFactorized
from bilexical.Representation import Representation, Vocabulary


def _rep(matrix, prefix="w"):
    words = tuple(f"{prefix}{i}" for i in range(len(matrix)))
    return Representation(Vocabulary(words), matrix, name=prefix)


def test_rank_one_diagonal():
    model = factorize(np.diag([4.0, 0.0]), epsilon=1e-10)
    assert model.rank_hint == 1
    np.testing.assert_allclose(model.U, [[2.0], [0.0]])
    np.testing.assert_allclose(model.V, [[2.0], [0.0]])


def test_identity_keeps_full_rank():
    model = factorize(np.eye(3))
    assert model.rank_hint == 3
    np.testing.assert_allclose(model.materialize(), np.eye(3), atol=1e-12)


def test_zero_operator():
    model = factorize(np.zeros((4, 4)))
    assert model.rank_hint == 1
    assert model.score(np.ones(4), np.ones(4)) == 0.0


def test_non_square():
    with pytest.raises(DimensionError):
        factorize(np.ones((2, 3)))


def test_exact_reconstruction_and_score_agreement(rng):
    for _ in range(20):
        n = int(rng.integers(1, 51))
        w = rng.standard_normal((n, n))
        model = factorize(w, epsilon=0.0)
        assert np.linalg.norm(model.materialize() - w) <= 1e-8 * np.linalg.norm(w)
        dense = BilinearModel.dense(w)
        probes = rng.standard_normal((5, n))
        for q in probes:
            fast = model.score_all(q, probes)
            slow = dense.score_all(q, probes)
            np.testing.assert_allclose(fast, slow, rtol=1e-6, atol=1e-9 * np.abs(slow).max())


def test_truncate_keeps_leading_factors(rng):
    w = rng.standard_normal((6, 6))
    model = truncate(BilinearModel.dense(w), 2)
    assert model.rank_hint == 2
    res = np.linalg.svd(w)
    best = (res[0][:, :2] * res[1][:2]) @ res[2][:2]
    np.testing.assert_allclose(model.materialize(), best, atol=1e-10)
    assert truncate(factorize(np.diag([1.0, 0.0])), 5).rank_hint == 1


def test_export_identity_factor(rng):
    rep = _rep(rng.standard_normal((4, 3)))
    model = BilinearModel.factorized(np.eye(3), rng.standard_normal((3, 3)))
    np.testing.assert_allclose(model.export_embeddings("query", rep).dense(), rep.dense())


def test_exported_inner_products_equal_scores(rng):
    queries = _rep(rng.standard_normal((5, 6)), "q")
    cands = _rep(rng.standard_normal((7, 6)), "c")
    model = factorize(rng.standard_normal((6, 6)), query_rep_id=queries.fingerprint(),
                      candidate_rep_id=cands.fingerprint())
    eq = model.export_embeddings("query", queries).dense()
    ec = model.export_embeddings("candidate", cands).dense()
    for i in range(5):
        for j in range(7):
            assert eq[i] @ ec[j] == pytest.approx(model.score(queries.dense()[i], cands.dense()[j]), abs=1e-10)


def test_rank_one_export_is_one_direction(rng):
    rep = _rep(rng.standard_normal((6, 4)))
    model = factorize(np.outer(rng.standard_normal(4), rng.standard_normal(4)))
    assert model.rank_hint == 1
    emb = model.export_embeddings("query", rep).dense()
    assert emb.shape == (6, 1)


def test_export_requires_factorized(rng):
    with pytest.raises(RequiresFactorized):
        BilinearModel.dense(np.eye(3)).export_embeddings("query", _rep(np.eye(3)))


def test_export_checks_representation(rng):
    rep = _rep(rng.standard_normal((4, 3)))
    model = factorize(rng.standard_normal((3, 3)), query_rep_id=rep.fingerprint())
    with pytest.raises(RepresentationMismatch):
        model.export_embeddings("query", _rep(rng.standard_normal((4, 3))))
    with pytest.raises(DimensionError):
        model.export_embeddings("candidate", _rep(np.eye(2)))
