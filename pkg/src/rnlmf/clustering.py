"""Subspace clustering on learned codes.

The pipeline builds a ridge self-representation affinity from the code
matrix, sparsifies and normalizes it, and runs normalized-Laplacian
spectral clustering.  A permutation-invariant clustering error completes
the toolkit.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve, eigh
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .validation import check_matrix

_ISOLATED_DEGREE = 1e-12


def affinity_from_codes(C, gamma=0.01):
    """Ridge self-representation affinity ``|(C'C + gamma I)^-1 C'C|``.

    Evaluated through the Woodbury identity, ``|C'(C C' + gamma I)^-1 C|``,
    so only a d x d system is factorized.  The diagonal is zeroed.
    """
    C = check_matrix(C, "C", allow_empty=True)
    if not gamma > 0:
        raise ValueError(f"gamma must be positive, got {gamma}")
    d = C.shape[0]
    factor = cho_factor(C @ C.T + gamma * np.eye(d), lower=True)
    A = np.abs(C.T @ cho_solve(factor, C))
    np.fill_diagonal(A, 0.0)
    return A


def sparsify_normalize(A, kappa):
    """Keep the ``kappa`` largest entries per column, rescale, symmetrize.

    Ties at the cut are broken toward the lower row index; each surviving
    column is divided by its maximum (all-zero columns are left alone);
    the result is ``(A + A') / 2``.
    """
    A = check_matrix(A, "A")
    n = A.shape[1]
    if kappa < 1:
        raise ValueError(f"kappa must be >= 1, got {kappa}")
    if kappa < n:
        # Stable sort on the negated values keeps the lower row index first
        # among ties, making the kept set deterministic.
        order = np.argsort(-A, axis=0, kind="stable")
        kept = np.zeros_like(A, dtype=bool)
        np.put_along_axis(kept, order[:kappa, :], True, axis=0)
        A = np.where(kept, A, 0.0)
    else:
        A = A.copy()
    maxes = A.max(axis=0)
    alive = maxes > 0
    A[:, alive] /= maxes[alive][None, :]
    return 0.5 * (A + A.T)


def spectral_embedding(A, k):
    """Rows of the ``k`` bottom eigenvectors of the normalized Laplacian.

    Rows are normalized to unit length; rows that are exactly zero (fully
    isolated vertices) are left at zero.
    """
    A = check_matrix(A, "A")
    n = A.shape[0]
    deg = A.sum(axis=1)
    deg = np.where(deg > 0, deg, _ISOLATED_DEGREE)
    inv_sqrt = 1.0 / np.sqrt(deg)
    L = np.eye(n) - inv_sqrt[:, None] * A * inv_sqrt[None, :]
    L = 0.5 * (L + L.T)
    _, V = eigh(L, subset_by_index=[0, k - 1])
    norms = np.linalg.norm(V, axis=1)
    alive = norms > 0
    V[alive] /= norms[alive][:, None]
    return V


def spectral_clustering(A, k, restarts=20, seed=0):
    """Cluster a symmetric nonnegative affinity into ``k`` groups."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    V = spectral_embedding(A, k)
    if k == 1:
        return np.zeros(V.shape[0], dtype=np.int64)
    km = KMeans(n_clusters=k, n_init=restarts, max_iter=100, random_state=seed)
    return km.fit_predict(V).astype(np.int64)


def clustering_error(pred, truth, k=None):
    """Fraction misclassified under the best label permutation.

    The optimal matching between predicted and true labels is found by
    maximum-weight assignment on the k x k confusion matrix.
    """
    pred = np.asarray(pred, dtype=np.int64).ravel()
    truth = np.asarray(truth, dtype=np.int64).ravel()
    if pred.shape != truth.shape:
        raise ValueError("pred and truth must have equal lengths")
    if pred.size == 0:
        raise ValueError("empty label sequences")
    if k is None:
        k = int(max(pred.max(), truth.max())) + 1
    if pred.min() < 0 or truth.min() < 0 or pred.max() >= k or truth.max() >= k:
        raise ValueError(f"labels must lie in [0, {k})")
    confusion = np.zeros((k, k), dtype=np.int64)
    np.add.at(confusion, (pred, truth), 1)
    rows, cols = linear_sum_assignment(-confusion)
    matched = confusion[rows, cols].sum()
    return 1.0 - matched / pred.size
