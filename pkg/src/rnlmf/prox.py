"""Closed-form proximal operators and the regularized linear solve.

These back every block update in the alternating solver: elementwise soft
thresholding (l1 prox), singular value thresholding (nuclear-norm prox),
column-wise soft thresholding (l2,1 prox), and a ridge system solve.
"""

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .validation import check_nonnegative


def soft_threshold(v, u):
    """Shrink ``v`` toward zero by ``u`` elementwise; scalar or array."""
    check_nonnegative(u, "u")
    v = np.asarray(v, dtype=np.float64)
    out = np.sign(v) * np.maximum(np.abs(v) - u, 0.0)
    return float(out) if out.ndim == 0 else out


def svt(M, u):
    """Soft-threshold the singular values of ``M`` by ``u`` (full SVD)."""
    check_nonnegative(u, "u")
    M = np.asarray(M, dtype=np.float64)
    U, s, Vt = np.linalg.svd(M, full_matrices=False)
    s = np.maximum(s - u, 0.0)
    return (U * s) @ Vt


def column_soft_threshold(M, u):
    """Shrink each column of ``M`` in Euclidean norm by ``u``, zeroing short ones."""
    check_nonnegative(u, "u")
    M = np.asarray(M, dtype=np.float64)
    norms = np.linalg.norm(M, axis=0)
    scale = np.zeros_like(norms)
    alive = norms > u
    scale[alive] = (norms[alive] - u) / norms[alive]
    return M * scale[None, :]


def ridge_factor(K, lam):
    """Cholesky factor of ``K + lam*I`` for reuse across ridge solves."""
    K = np.asarray(K, dtype=np.float64)
    d = K.shape[0]
    return cho_factor(K + lam * np.eye(d), lower=True)


def ridge_solve(K, B, lam, factor=None):
    """Solve ``(K + lam*I) C = B`` for symmetric PSD ``K`` and ``lam > 0``.

    Pass ``factor=ridge_factor(K, lam)`` to reuse a factorization across
    calls with the same ``K``.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    B = np.asarray(B, dtype=np.float64)
    if factor is None:
        factor = ridge_factor(K, lam)
    return cho_solve(factor, B)
