import io

import numpy as np
import pytest
import scipy.sparse as sp

from bilexical.errors import FormatError, InvalidRank
from bilexical.Representation import (
    Representation,
    Vocabulary,
    export_vectors,
    import_vectors,
    svd_project,
)


def _rep(matrix, words=None, name="phi"):
    words = words or [f"w{i}" for i in range(len(matrix))]
    return Representation(Vocabulary(tuple(words)), np.asarray(matrix, dtype=float), name=name)


def test_import_vectors_direct_parse():
    rep = import_vectors(io.StringIO("2 2\na 1.0 0.0\nb 0.0 1.0\n"))
    assert rep.dim == 2
    np.testing.assert_array_equal(rep.vector("a"), [1.0, 0.0])


def test_import_vectors_row_too_long():
    with pytest.raises(FormatError) as err:
        import_vectors(io.StringIO("2 2\na 1.0 0.0\nb 0.0 1.0 2.0\n"))
    assert err.value.line == 3


def test_import_vectors_duplicate_word():
    with pytest.raises(FormatError) as err:
        import_vectors(io.StringIO("2 2\na 1 0\na 0 1\n"))
    assert err.value.line == 3


@pytest.mark.parametrize("text, line", [
    ("two 2\na 1 0\n", 1),
    ("1 2\na 1 x\n", 2),
    ("1 2\na 1 nan\n", 2),
    ("3 2\na 1 0\nb 0 1\n", 3),
])
def test_import_vectors_rejects_malformed(text, line):
    with pytest.raises(FormatError) as err:
        import_vectors(io.StringIO(text))
    assert err.value.line == line


def test_export_then_import_keeps_nine_digits(tmp_path, rng):
    rep = _rep(rng.standard_normal((4, 3)))
    path = tmp_path / "vectors.txt"
    export_vectors(rep, path)
    back = import_vectors(path)
    assert back.vocab.words == rep.vocab.words
    np.testing.assert_allclose(back.dense(), rep.dense(), rtol=1e-8)
    assert path.read_text(encoding="utf-8").splitlines()[0] == "4 3"


def test_fingerprint_ignores_storage():
    m = np.array([[1.0, 0.0], [0.0, 2.0]])
    dense = _rep(m)
    sparse = Representation(dense.vocab, sp.csr_matrix(m))
    assert dense.fingerprint() == sparse.fingerprint()
    assert dense.fingerprint() != _rep(m * 2).fingerprint()


def test_svd_project_identity_preserves_inner_products():
    rep = _rep(np.eye(2))
    proj = svd_project(rep, 2).dense()
    np.testing.assert_allclose(proj @ proj.T, np.eye(2), atol=1e-12)


def test_svd_project_rank_one_rows():
    rep = _rep([[1.0, 1.0], [1.0, 1.0]])
    proj = svd_project(rep, 1)
    np.testing.assert_allclose(np.abs(proj.vector("w0")), [np.sqrt(2.0)])
    assert proj.vector("w0") @ proj.vector("w1") == pytest.approx(2.0)


def test_svd_project_rejects_bad_k(rng):
    rep = _rep(rng.standard_normal((3, 2)))
    with pytest.raises(InvalidRank):
        svd_project(rep, 0)
    with pytest.raises(InvalidRank):
        svd_project(rep, 3)


def test_svd_project_full_rank_preserves_geometry(rng):
    m = rng.standard_normal((6, 4))
    proj = svd_project(_rep(m), 4).dense()
    np.testing.assert_allclose(proj @ proj.T, m @ m.T, rtol=1e-8, atol=1e-10)


def test_svd_project_prefixes_are_nested(rng):
    rep = _rep(rng.standard_normal((8, 5)))
    small = svd_project(rep, 2).dense()
    large = svd_project(rep, 4).dense()
    np.testing.assert_allclose(small, large[:, :2], atol=1e-10)
