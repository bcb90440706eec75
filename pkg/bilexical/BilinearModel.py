import numpy as np
import scipy.sparse as sp
from scipy.special import softmax

from bilexical.errors import (
    DimensionError,
    EmptyCandidates,
    InvalidArgument,
    RepresentationMismatch,
    RequiresFactorized,
)
from bilexical.prox import as_matrix, count_nonzero, svd
from bilexical.Representation import Representation

FORMS = ("dense", "factorized")
SIDES = ("query", "candidate")


def _as_vector(v):
    if sp.issparse(v):
        v = v.toarray()
    return np.asarray(v, dtype=np.float64).ravel()


def _as_rows(m):
    if isinstance(m, Representation):
        return m.dense()
    if sp.issparse(m):
        return m.toarray()
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim == 1 and arr.size == 0:
        return arr.reshape(0, 0)
    return arr


class BilinearModel:
    """
    Bilinear scorer phi(q)^T W phi(c), kept either as a dense n x n operator W
    or as a factorized pair (U, V) of n x k matrices with W = U V^T.

    Models are not modified after construction.

    Args:
        form (str): "dense" or "factorized"
        W: Dense operator (dense form)
        U, V: Factors (factorized form)
        query_rep_id, candidate_rep_id (str): Fingerprints of the representations
            the operator was trained against, if known
        sparse_storage (bool): Dense operator stored as non-zeros only (l1 models);
            changes the operation count, not the scores
    """
    def __init__(self, form, W=None, U=None, V=None, query_rep_id=None,
                 candidate_rep_id=None, sparse_storage=False):
        if form not in FORMS:
            raise InvalidArgument(f"form must be one of {FORMS}, got {form!r}")
        if form == "dense":
            W = np.array(as_matrix(W))
            if W.shape[0] != W.shape[1]:
                raise DimensionError(f"dense operator must be square, got {W.shape}")
            W.setflags(write=False)
            self.rep_dim = W.shape[0]
        else:
            U, V = np.array(as_matrix(U)), np.array(as_matrix(V))
            if U.shape != V.shape:
                raise DimensionError(f"factors must share a shape, got U{U.shape} and V{V.shape}")
            if U.shape[1] < 1:
                raise DimensionError("factorized model needs rank k >= 1")
            U.setflags(write=False)
            V.setflags(write=False)
            self.rep_dim = U.shape[0]
        self.form = form
        self.W = W
        self.U = U
        self.V = V
        self.query_rep_id = query_rep_id
        self.candidate_rep_id = candidate_rep_id
        self.sparse_storage = bool(sparse_storage) and form == "dense"

    @classmethod
    def dense(cls, W, **kwargs):
        return cls("dense", W=W, **kwargs)

    @classmethod
    def factorized(cls, U, V, **kwargs):
        return cls("factorized", U=U, V=V, **kwargs)

    @property
    def is_dense(self):
        return self.form == "dense"

    @property
    def rank_hint(self):
        return None if self.is_dense else self.U.shape[1]

    def materialize(self):
        """The dense operator W (U V^T for factorized models)"""
        if self.is_dense:
            return np.array(self.W)
        return self.U @ self.V.T

    def nnz(self):
        return count_nonzero(self.materialize())

    def _check_query(self, phi_q):
        phi_q = _as_vector(phi_q)
        if phi_q.shape[0] != self.rep_dim:
            raise DimensionError(f"query vector has length {phi_q.shape[0]}, model expects {self.rep_dim}")
        return phi_q

    def _check_candidates(self, candidates):
        rows = _as_rows(candidates)
        if rows.shape[0] == 0:
            return rows.reshape(0, self.rep_dim)
        if rows.ndim != 2 or rows.shape[1] != self.rep_dim:
            raise DimensionError(f"candidate vectors have shape {rows.shape}, model expects width {self.rep_dim}")
        return rows

    def query_projection(self, phi_q):
        """First stage of score_all: W^T phi(q) (dense) or U^T phi(q) (factorized)"""
        phi_q = self._check_query(phi_q)
        if self.is_dense:
            return phi_q @ self.W
        return phi_q @ self.U

    def candidate_embeddings(self, candidates):
        """V^T phi(c) for each candidate row; identity for dense models"""
        rows = self._check_candidates(candidates)
        if self.is_dense:
            return rows
        return rows @ self.V

    def score(self, phi_q, phi_c):
        phi_c = _as_vector(phi_c)
        if phi_c.shape[0] != self.rep_dim:
            raise DimensionError(f"candidate vector has length {phi_c.shape[0]}, model expects {self.rep_dim}")
        if self.is_dense:
            return float(self.query_projection(phi_q) @ phi_c)
        return float(self.query_projection(phi_q) @ (phi_c @ self.V))

    def score_all(self, phi_q, candidates, candidate_embeddings=None):
        """
        Scores of one query against every candidate row, in candidate order.

        Args:
            phi_q: Query vector of length rep_dim
            candidates: Candidate rows (|M| x rep_dim) or a Representation
            candidate_embeddings: Precomputed candidate_embeddings(candidates), optional

        Returns:
            np.ndarray: One score per candidate
        """
        proj = self.query_projection(phi_q)
        emb = candidate_embeddings if candidate_embeddings is not None else self.candidate_embeddings(candidates)
        return emb @ proj

    def distribution(self, phi_q, candidates, candidate_embeddings=None):
        """Pr(c | q): softmax of score_all over the full candidate set"""
        scores = self.score_all(phi_q, candidates, candidate_embeddings)
        if scores.size == 0:
            raise EmptyCandidates("distribution needs at least one candidate")
        return softmax(scores)

    def op_count(self, n_candidates):
        """
        Double operations to score all candidates for one query (multiply-add = 2).

        dense: 2n^2 + 2n|M|; sparse dense: 2 nnz(W) + 2n|M|;
        factorized: 2nk + 2k|M| with candidate projections precomputed.
        """
        n = self.rep_dim
        if self.is_dense:
            if self.sparse_storage:
                return 2 * self.nnz() + 2 * n * n_candidates
            return 2 * n * n + 2 * n * n_candidates
        k = self.rank_hint
        return 2 * n * k + 2 * k * n_candidates

    def precompute_ops(self, n_candidates):
        """Offline cost of projecting all candidates (factorized models only)"""
        if self.is_dense:
            return 0
        return 2 * self.rep_dim * self.rank_hint * n_candidates

    def export_embeddings(self, side, rep):
        """
        Task-specific k-dimensional embeddings U^T phi(w) or V^T phi(w).

        Args:
            side (str): "query" or "candidate"
            rep (Representation): Representation for that side

        Returns:
            Representation: One k-dimensional vector per word of `rep`
        """
        if self.is_dense:
            raise RequiresFactorized("export_embeddings needs a factorized model; call factorize() first")
        if side not in SIDES:
            raise InvalidArgument(f"side must be one of {SIDES}, got {side!r}")
        if rep.dim != self.rep_dim:
            raise DimensionError(f"representation has dim {rep.dim}, model expects {self.rep_dim}")
        expected = self.query_rep_id if side == "query" else self.candidate_rep_id
        if expected is not None and expected != rep.fingerprint():
            raise RepresentationMismatch(f"{side} representation {rep.name!r} differs from the one the model was trained on")
        factor = self.U if side == "query" else self.V
        return Representation(rep.vocab, np.asarray(rep.matrix @ factor), name=f"{rep.name}-{side}-k{self.rank_hint}")

    def describe(self):
        if self.is_dense:
            storage = f"sparse nnz={self.nnz()}" if self.sparse_storage else "dense"
            return f"{storage} n={self.rep_dim}"
        return f"factorized n={self.rep_dim} k={self.rank_hint}"

    def __repr__(self):
        return f"BilinearModel({self.describe()})"


def factorize(w, epsilon=1e-10, query_rep_id=None, candidate_rep_id=None):
    """
    Split a square operator into W = U V^T with U = A_k S_k^(1/2), V = B_k S_k^(1/2).

    k counts singular values above epsilon * sigma_max; a zero operator gives
    k = 1 with zero factors.

    Raises:
        DimensionError: If w is not square
    """
    arr = as_matrix(w)
    if arr.shape[0] != arr.shape[1]:
        raise DimensionError(f"factorize needs a square matrix, got {arr.shape}")
    if epsilon < 0:
        raise InvalidArgument(f"epsilon must be non-negative, got {epsilon}")
    res = svd(arr)
    n = arr.shape[0]
    s = res.singular
    if s.size == 0 or s[0] == 0.0:
        zeros = np.zeros((n, 1))
        return BilinearModel.factorized(zeros, zeros.copy(), query_rep_id=query_rep_id,
                                        candidate_rep_id=candidate_rep_id)
    k = max(1, int(np.sum(s > epsilon * s[0])))
    root = np.sqrt(s[:k])
    U = res.left[:, :k] * root
    V = res.right[:, :k] * root
    return BilinearModel.factorized(U, V, query_rep_id=query_rep_id, candidate_rep_id=candidate_rep_id)


def truncate(model, k):
    """Keep the k leading spectral factors of a model (rank-k approximation)"""
    if k < 1:
        raise InvalidArgument(f"k must be >= 1, got {k}")
    full = factorize(model.materialize(), epsilon=0.0, query_rep_id=model.query_rep_id,
                     candidate_rep_id=model.candidate_rep_id)
    if full.rank_hint <= k:
        return full
    return BilinearModel.factorized(full.U[:, :k], full.V[:, :k], query_rep_id=model.query_rep_id,
                                    candidate_rep_id=model.candidate_rep_id)
