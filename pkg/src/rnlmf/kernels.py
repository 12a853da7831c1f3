"""Kernel evaluations, the bandwidth heuristic, and feature-space norm checks.

Columns are data points throughout: an ``m x n`` matrix holds ``n`` points
in ``R^m``.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import eigvalsh

from .validation import check_matrix, check_positive, check_same_rows

# Exact pairwise sums are O(n^2 m); above this many pairs the bandwidth
# heuristic switches to a seeded Monte-Carlo estimate.
_SIGMA_EXACT_PAIR_LIMIT = 10_000_000
_SIGMA_SAMPLE_PAIRS = 1_000_000


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family and parameters.

    ``rbf`` evaluates ``exp(-||x - y||^2 / sigma^2)`` (every self-similarity
    is exactly 1); ``poly`` evaluates ``(x'y + c)^q``.
    """

    family: str = "rbf"
    sigma: float = 1.0
    c: float = 1.0
    q: int = 2

    def __post_init__(self):
        if self.family not in ("rbf", "poly"):
            raise ValueError(f"unknown kernel family {self.family!r}")
        if self.family == "rbf" and not self.sigma > 0:
            raise ValueError(f"rbf kernel requires sigma > 0, got {self.sigma}")
        if self.family == "poly":
            if self.c < 0:
                raise ValueError(f"poly kernel requires c >= 0, got {self.c}")
            if self.q < 0 or int(self.q) != self.q:
                raise ValueError(f"poly kernel requires integer q >= 0, got {self.q}")


@dataclass(frozen=True)
class SeriesCheckReport:
    """Both sides of the truncated Gaussian-to-polynomial series identity."""

    lhs: float
    truncated_sum: float
    remainder: float
    bound: float
    kappa1: float
    kappa2: float


def squared_distances(A, B=None):
    """Pairwise squared Euclidean distances between columns of ``A`` and ``B``.

    When ``B is None`` (or the same array as ``A``) the diagonal is exactly
    zero; small negative round-off is clamped everywhere.
    """
    A = np.asarray(A, dtype=np.float64)
    same = B is None or B is A
    B = A if same else np.asarray(B, dtype=np.float64)
    check_same_rows(A, B)
    G = A.T @ B
    if same:
        sq_a = np.diagonal(G).copy()
        sq_b = sq_a
    else:
        sq_a = np.einsum("ij,ij->j", A, A)
        sq_b = np.einsum("ij,ij->j", B, B)
    D = sq_a[:, None] + sq_b[None, :] - 2.0 * G
    np.maximum(D, 0.0, out=D)
    if same:
        np.fill_diagonal(D, 0.0)
    return D


def kernel_matrix(A, B=None, spec=KernelSpec()):
    """Kernel Gram block: entry (i, j) pairs column i of ``A`` with column j of ``B``."""
    A = check_matrix(A, "A")
    same = B is None or B is A
    B = A if same else check_matrix(B, "B")
    check_same_rows(A, B)
    if spec.family == "rbf":
        K = squared_distances(A, None if same else B)
        K *= -1.0 / (spec.sigma**2)
        np.exp(K, out=K)
        return K
    K = A.T @ B + spec.c
    return K**spec.q


def rbf_kernel(A, B, sigma):
    """Shorthand for an RBF Gram block with width ``sigma``."""
    return kernel_matrix(A, B, KernelSpec(family="rbf", sigma=sigma))


def sigma_heuristic(Xhat, scale=1.0, seed=0):
    """Bandwidth from the mean pairwise column distance.

    Returns ``scale * n^-2 * sum_{ij} ||x_i - x_j||`` over all ordered column
    pairs (the zero diagonal included).  When the pair count exceeds
    ``_SIGMA_EXACT_PAIR_LIMIT``, the mean is estimated from
    ``_SIGMA_SAMPLE_PAIRS`` seeded uniform ordered pairs instead.
    """
    X = check_matrix(Xhat, "Xhat")
    check_positive(scale, "scale")
    n = X.shape[1]
    if n * n <= _SIGMA_EXACT_PAIR_LIMIT:
        total = 0.0
        block = max(1, _SIGMA_EXACT_PAIR_LIMIT // (8 * n))
        sq = np.einsum("ij,ij->j", X, X)
        for start in range(0, n, block):
            stop = min(start + block, n)
            D = sq[start:stop, None] + sq[None, :] - 2.0 * (X[:, start:stop].T @ X)
            np.maximum(D, 0.0, out=D)
            # The i = j terms are exactly zero; round-off in the Gram trick
            # must not leak into them.
            D[np.arange(stop - start), np.arange(start, stop)] = 0.0
            total += np.sum(np.sqrt(D))
        mean_dist = total / (n * n)
    else:
        rng = np.random.default_rng(seed)
        i = rng.integers(0, n, size=_SIGMA_SAMPLE_PAIRS)
        j = rng.integers(0, n, size=_SIGMA_SAMPLE_PAIRS)
        mean_dist = float(np.mean(np.linalg.norm(X[:, i] - X[:, j], axis=0)))
    sigma = scale * mean_dist
    if not sigma > 0:
        raise ValueError("pairwise distances are all zero; sigma would not be positive")
    return float(sigma)


def feature_nuclear_norm(D, C, spec=KernelSpec()):
    """Nuclear norm of the feature image of ``D`` times ``C``.

    Computed through the kernel trick as the sum of square roots of the
    eigenvalues of ``C' K(D, D) C`` (round-off negatives clamped at zero).
    """
    D = check_matrix(D, "D")
    C = check_matrix(C, "C")
    if C.shape[0] != D.shape[1]:
        raise ValueError(
            f"C must have {D.shape[1]} rows to match the atom count, got {C.shape[0]}"
        )
    K = kernel_matrix(D, None, spec)
    M = C.T @ K @ C
    M = 0.5 * (M + M.T)
    w = eigvalsh(M)
    return float(np.sum(np.sqrt(np.maximum(w, 0.0))))


def series_truncation_check(x, y, sigma, c=0.0, q=8):
    """Evaluate the truncated polynomial-series expansion of a Gaussian kernel.

    The identity expands ``exp(-||x - y||^2 / (2 sigma^2))`` as
    ``s * sum_u (x'y + c)^u / (sigma^(2u) u!)`` with
    ``s = exp(-(||x||^2 + ||y||^2 + 2c) / (2 sigma^2))``; the report carries
    both sides truncated at degree ``q`` together with the tail bound
    ``3 kappa1 exp(-c/sigma^2) / q! * ((kappa2 + c) / sigma^2)^q``
    (single-point, unit-coefficient case).  The bound is only guaranteed when
    ``sigma^2 > kappa2 + c``.
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    y = np.asarray(y, dtype=np.float64).ravel()
    if x.shape != y.shape:
        raise ValueError("x and y must have the same length")
    check_positive(sigma, "sigma")
    if c < 0:
        raise ValueError(f"c must be nonnegative, got {c}")
    if q < 0:
        raise ValueError(f"q must be nonnegative, got {q}")

    sq_x = float(x @ x)
    sq_y = float(y @ y)
    inner = float(x @ y)
    sig2 = sigma**2

    lhs = math.exp(-((sq_x + sq_y - 2.0 * inner)) / (2.0 * sig2))
    s = math.exp(-(sq_x + sq_y + 2.0 * c) / (2.0 * sig2))
    # Accumulate terms ((x'y + c)/sigma^2)^u / u! without forming u! directly.
    term = 1.0
    partial = 1.0
    base = (inner + c) / sig2
    for u in range(1, q + 1):
        term *= base / u
        partial += term
    truncated = s * partial

    kappa1 = max(0.5, 1.0, 0.5)  # n = d = 1, C = [1]
    kappa2 = max(sq_x, sq_y)
    bound = (
        3.0
        * kappa1
        * math.exp(-c / sig2)
        / math.factorial(q)
        * ((kappa2 + c) / sig2) ** q
    )
    return SeriesCheckReport(
        lhs=lhs,
        truncated_sum=truncated,
        remainder=lhs - truncated,
        bound=bound,
        kappa1=kappa1,
        kappa2=kappa2,
    )
