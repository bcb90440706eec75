import numpy as np
import pytest
import scipy.sparse as sp

from bilexical.errors import NumericError
from bilexical.prox import count_nonzero, numerical_rank, svd


def test_diagonal():
    np.testing.assert_allclose(svd(np.diag([3.0, 1.0])).singular, [3.0, 1.0])


def test_zero_matrix():
    np.testing.assert_array_equal(svd(np.zeros((3, 3))).singular, [0.0, 0.0, 0.0])


def test_hand_computed():
    np.testing.assert_allclose(svd([[0.0, 2.0], [-1.0, 0.0]]).singular, [2.0, 1.0])


def test_non_finite_input():
    with pytest.raises(NumericError):
        svd([[1.0, np.nan], [0.0, 1.0]])


def test_contract_on_random_matrices(rng):
    for shape in [(5, 5), (7, 3), (3, 7)]:
        m = rng.standard_normal(shape)
        res = svd(m)
        assert np.all(np.diff(res.singular) <= 0) and np.all(res.singular >= 0)
        np.testing.assert_allclose(res.left.T @ res.left, np.eye(res.left.shape[1]), atol=1e-10)
        np.testing.assert_allclose(res.right.T @ res.right, np.eye(res.right.shape[1]), atol=1e-10)
        assert np.linalg.norm(res.reconstruct() - m) <= 1e-8 * np.linalg.norm(m)


def test_sign_convention_is_deterministic(rng):
    m = rng.standard_normal((6, 6))
    for side, attr in (("left", "left"), ("right", "right")):
        res = svd(m, sign_side=side)
        vecs = getattr(res, attr)
        pivots = vecs[np.argmax(np.abs(vecs), axis=0), np.arange(vecs.shape[1])]
        assert np.all(pivots >= 0)
        again = svd(m.copy(), sign_side=side)
        np.testing.assert_array_equal(getattr(again, attr), vecs)


def test_sparse_and_dense_agree(rng):
    m = rng.standard_normal((4, 4)) * (rng.random((4, 4)) < 0.5)
    np.testing.assert_allclose(svd(sp.csr_matrix(m)).singular, svd(m).singular)


def test_rank_and_nonzero_helpers():
    w = np.diag([2.0, 1e-13, 0.0])
    assert numerical_rank(w) == 1
    assert count_nonzero(w) == 1
    assert numerical_rank(np.zeros((2, 2))) == 0
