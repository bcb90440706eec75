from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from bilexical.errors import InvalidArgument, NumericError

# singular values at or below RANK_TOL * sigma_max count as zero
RANK_TOL = 1e-10
# entries with |w_ij| <= NNZ_TOL count as zero
NNZ_TOL = 1e-12

REGULARIZERS = ("l1", "l2", "nuclear")


@dataclass(frozen=True)
class SvdResult:
    """Thin SVD: m = left @ diag(singular) @ right.T"""
    left: np.ndarray
    singular: np.ndarray
    right: np.ndarray

    def reconstruct(self, singular=None):
        s = self.singular if singular is None else singular
        return (self.left * s) @ self.right.T


def as_matrix(m):
    """
    Convert dense or sparse input to a finite 2-D float64 array.

    Raises:
        NumericError: If any entry is NaN or infinite
    """
    if sp.issparse(m):
        m = m.toarray()
    arr = np.asarray(m, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr.reshape(1, -1)
    if arr.ndim != 2:
        raise InvalidArgument(f"expected a matrix, got array of shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise NumericError("matrix has non-finite entries")
    return arr


def svd(m, sign_side="left"):
    """
    Deterministic thin SVD of a finite matrix.

    The sign of each singular pair is fixed so that the largest-magnitude
    entry of the left (default) or right singular vector is non-negative.

    Args:
        m: Dense array or scipy sparse matrix
        sign_side (str): "left" or "right", which vectors carry the sign convention

    Returns:
        SvdResult: left (rows x r), singular (r,), right (cols x r), r = min(rows, cols)
    """
    if sign_side not in ("left", "right"):
        raise InvalidArgument(f"sign_side must be 'left' or 'right', got {sign_side!r}")
    arr = as_matrix(m)
    try:
        left, singular, right_t = np.linalg.svd(arr, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericError(f"SVD did not converge: {e}")
    right = right_t.T.copy()
    left = left.copy()

    ref = left if sign_side == "left" else right
    if ref.shape[0] > 0:
        pivots = np.argmax(np.abs(ref), axis=0)
        signs = np.sign(ref[pivots, np.arange(ref.shape[1])])
        signs[signs == 0] = 1.0
        left *= signs
        right *= signs
    return SvdResult(left=left, singular=np.maximum(singular, 0.0), right=right)


def _check_lambda(lam):
    if lam < 0:
        raise InvalidArgument(f"lambda must be non-negative, got {lam}")


def prox_l1(w, lam):
    """Entrywise soft threshold: sign(w) * max(|w| - lam, 0)"""
    _check_lambda(lam)
    arr = as_matrix(w)
    return np.sign(arr) * np.maximum(np.abs(arr) - lam, 0.0)


def prox_l2(w, lam):
    """Prox of lam * 0.5 * ||w||_F^2, a plain rescaling"""
    _check_lambda(lam)
    return as_matrix(w) / (1.0 + lam)


def prox_nuclear(w, lam):
    """Soft-threshold the singular values of w by lam and reconstruct"""
    _check_lambda(lam)
    res = svd(w)
    if res.singular.size == 0:
        return res.reconstruct()
    shrunk = np.maximum(res.singular - lam, 0.0)
    shrunk[shrunk <= RANK_TOL * res.singular[0]] = 0.0
    return res.reconstruct(shrunk)


PROX_OPERATORS = {
    "l1": prox_l1,
    "l2": prox_l2,
    "nuclear": prox_nuclear,
}


def prox(w, lam, regularizer):
    try:
        op = PROX_OPERATORS[regularizer]
    except KeyError:
        raise InvalidArgument(f"unknown regularizer {regularizer!r}, expected one of {REGULARIZERS}")
    return op(w, lam)


def penalty(w, regularizer):
    """Regularization penalty rho(w) matching the prox operators above"""
    arr = as_matrix(w)
    if regularizer == "l1":
        return float(np.abs(arr).sum())
    if regularizer == "l2":
        return 0.5 * float(np.sum(arr * arr))
    if regularizer == "nuclear":
        return float(np.linalg.svd(arr, compute_uv=False).sum())
    raise InvalidArgument(f"unknown regularizer {regularizer!r}, expected one of {REGULARIZERS}")


def numerical_rank(w):
    s = np.linalg.svd(as_matrix(w), compute_uv=False)
    if s.size == 0 or s[0] == 0.0:
        return 0
    return int(np.sum(s > RANK_TOL * s[0]))


def count_nonzero(w):
    return int(np.sum(np.abs(as_matrix(w)) > NNZ_TOL))
