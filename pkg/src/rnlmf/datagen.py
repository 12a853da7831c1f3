"""Synthetic data from unions of polynomial manifolds, noise injectors, metrics.

Each manifold maps a low-dimensional latent ``z``, uniform on (-1, 1)^r,
through a random linear combination of its degree-1..p monomials into the
ambient space.  Injectors corrupt a generated matrix with entrywise sparse
Gaussian noise, column-wise Gaussian noise, salt-and-pepper values, or
rectangular occlusions (columns read as images).
"""

import math
from dataclasses import dataclass
from itertools import combinations_with_replacement

import numpy as np

from .validation import check_matrix


def _round_half_away(x):
    # Fraction-to-count conversion rounds halves away from zero (x >= 0 here).
    return int(math.floor(x + 0.5))


def feature_count(r, p):
    """Number of monomials of total degree 1..p in r variables."""
    return math.comb(r + p, p) - 1


def poly_features(z, p):
    """All monomials of ``z`` of total degree 1..p, graded lexicographic order."""
    z = np.asarray(z, dtype=np.float64).ravel()
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    feats = []
    for degree in range(1, p + 1):
        for combo in combinations_with_replacement(range(z.size), degree):
            feats.append(np.prod(z[list(combo)]))
    return np.asarray(feats)


def _monomial_index_sets(r, p):
    return [
        list(combo)
        for degree in range(1, p + 1)
        for combo in combinations_with_replacement(range(r), degree)
    ]


@dataclass(frozen=True)
class SynthSpec:
    """Union-of-polynomial-manifolds generator parameters."""

    k: int
    r: int = 3
    p: int = 3
    m: int = 30
    samples_per_manifold: int = 300
    shuffle: bool = False
    seed: int = 0

    def __post_init__(self):
        for name in ("k", "r", "p", "m", "samples_per_manifold"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be a positive integer")


def sample_manifold_union(spec):
    """Draw the synthetic matrix and its ground-truth manifold labels.

    For each manifold a fresh coefficient matrix with standard-normal
    entries maps the monomial features of latent points, uniform on
    (-1, 1)^r, into R^m.  Returns ``(X, labels)`` with shape
    ``(m, k * samples_per_manifold)``; when ``spec.shuffle`` is set the
    columns (and labels) are permuted.
    """
    rng = np.random.default_rng(spec.seed)
    dim = feature_count(spec.r, spec.p)
    index_sets = _monomial_index_sets(spec.r, spec.p)
    blocks = []
    for _ in range(spec.k):
        gamma = rng.standard_normal((spec.m, dim))
        Z = rng.uniform(-1.0, 1.0, size=(spec.samples_per_manifold, spec.r))
        feats = np.stack([np.prod(Z[:, idx], axis=1) for idx in index_sets], axis=0)
        blocks.append(gamma @ feats)
    X = np.concatenate(blocks, axis=1)
    labels = np.repeat(np.arange(spec.k, dtype=np.int64), spec.samples_per_manifold)
    if spec.shuffle:
        perm = rng.permutation(X.shape[1])
        X = X[:, perm]
        labels = labels[perm]
    return X, labels


def inject_sparse_gaussian(X, rho, sigma_e_ratio=1.0, seed=0):
    """Add Gaussian noise to a ``rho`` fraction of entries, chosen uniformly.

    Exactly ``round(rho * m * n)`` positions are drawn without replacement;
    nonzero values are N(0, (sigma_e_ratio * sigma_x)^2) with ``sigma_x``
    the population standard deviation of the entries of ``X``.  Returns
    ``(Xhat, E)``.
    """
    X = check_matrix(X, "X")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    rng = np.random.default_rng(seed)
    count = _round_half_away(rho * X.size)
    E = np.zeros_like(X)
    if count:
        flat = rng.choice(X.size, size=count, replace=False)
        E.flat[flat] = rng.normal(0.0, sigma_e_ratio * X.std(), size=count)
    return X + E, E


def inject_columnwise_gaussian(X, rho, seed=0):
    """Add N(0, sigma_x^2) noise to every entry of a ``rho`` fraction of columns."""
    X = check_matrix(X, "X")
    if not 0.0 <= rho <= 1.0:
        raise ValueError(f"rho must lie in [0, 1], got {rho}")
    rng = np.random.default_rng(seed)
    count = _round_half_away(rho * X.shape[1])
    E = np.zeros_like(X)
    if count:
        cols = rng.choice(X.shape[1], size=count, replace=False)
        E[:, cols] = rng.normal(0.0, X.std(), size=(X.shape[0], count))
    return X + E, E


def inject_salt_pepper(X, density=0.25, fraction_of_columns=0.3, seed=0):
    """Set random entries of chosen columns to the data minimum or maximum.

    ``round(fraction_of_columns * n)`` columns are drawn; in each,
    ``round(density * m)`` entries (without replacement) are set to
    ``X.min()`` or ``X.max()`` with equal probability.  Returns
    ``(Xhat, mask)``.
    """
    X = check_matrix(X, "X")
    for name, value in (("density", density), ("fraction_of_columns", fraction_of_columns)):
        if not 0.0 <= value <= 1.0:
            raise ValueError(f"{name} must lie in [0, 1], got {value}")
    rng = np.random.default_rng(seed)
    m, n = X.shape
    Xhat = X.copy()
    mask = np.zeros_like(X, dtype=bool)
    n_cols = _round_half_away(fraction_of_columns * n)
    n_entries = _round_half_away(density * m)
    if n_cols and n_entries:
        lo, hi = X.min(), X.max()
        cols = rng.choice(n, size=n_cols, replace=False)
        for j in cols:
            rows = rng.choice(m, size=n_entries, replace=False)
            values = np.where(rng.random(n_entries) < 0.5, lo, hi)
            Xhat[rows, j] = values
            mask[rows, j] = True
    return Xhat, mask


def inject_block_occlusion(X, image_h, image_w, fraction_of_columns=0.3,
                           block_scale=0.25, seed=0):
    """Occlude a random rectangular block in chosen columns seen as images.

    Columns hold ``image_h x image_w`` images in column-major pixel order.
    On each of the ``round(fraction_of_columns * n)`` chosen columns, a
    ``round(block_scale * h) x round(block_scale * w)`` block at a uniformly
    random valid position is set to the data maximum.  Returns
    ``(Xhat, mask)``.
    """
    X = check_matrix(X, "X")
    m, n = X.shape
    if image_h * image_w != m:
        raise ValueError(f"image_h * image_w must equal {m}, got {image_h}x{image_w}")
    if not 0.0 <= fraction_of_columns <= 1.0:
        raise ValueError("fraction_of_columns must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    bh = max(1, _round_half_away(block_scale * image_h))
    bw = max(1, _round_half_away(block_scale * image_w))
    Xhat = X.copy()
    mask = np.zeros_like(X, dtype=bool)
    n_cols = _round_half_away(fraction_of_columns * n)
    if n_cols:
        hi = X.max()
        cols = rng.choice(n, size=n_cols, replace=False)
        for j in cols:
            r0 = rng.integers(0, image_h - bh + 1)
            c0 = rng.integers(0, image_w - bw + 1)
            img_mask = np.zeros((image_h, image_w), dtype=bool)
            img_mask[r0:r0 + bh, c0:c0 + bw] = True
            flat = img_mask.reshape(-1, order="F")
            Xhat[flat, j] = hi
            mask[flat, j] = True
    return Xhat, mask


@dataclass(frozen=True)
class NoiseSpec:
    """Noise-injection parameters for the composable CLI front end."""

    kind: str  # sparse | column | saltpepper | occlusion
    rho: float = 0.3
    sigma_e_ratio: float = 1.0
    density: float = 0.25
    block_scale: float = 0.25
    image_h: int = 0
    image_w: int = 0
    seed: int = 0


def apply_noise(X, spec):
    """Apply one injector per ``spec``; returns ``(Xhat, E)`` with ``E = Xhat - X``."""
    if spec.kind == "sparse":
        return inject_sparse_gaussian(X, spec.rho, spec.sigma_e_ratio, spec.seed)
    if spec.kind == "column":
        return inject_columnwise_gaussian(X, spec.rho, spec.seed)
    if spec.kind == "saltpepper":
        Xhat, _ = inject_salt_pepper(X, spec.density, spec.rho, spec.seed)
    elif spec.kind == "occlusion":
        Xhat, _ = inject_block_occlusion(X, spec.image_h, spec.image_w, spec.rho,
                                         spec.block_scale, spec.seed)
    else:
        raise ValueError(f"unknown noise kind {spec.kind!r}")
    return Xhat, Xhat - X


def rmse(X_true, X_est):
    """Normalized root-mean-square error ``||X - Xest||_F / ||X||_F``."""
    X_true = np.asarray(X_true, dtype=np.float64)
    X_est = np.asarray(X_est, dtype=np.float64)
    if X_true.shape != X_est.shape:
        raise ValueError("shapes differ")
    denom = np.linalg.norm(X_true)
    if denom == 0:
        raise ValueError("X_true has zero norm")
    return float(np.linalg.norm(X_true - X_est) / denom)


def mae(X_true, X_est):
    """Normalized mean-absolute error ``||X - Xest||_1 / ||X||_1`` (entrywise)."""
    X_true = np.asarray(X_true, dtype=np.float64)
    X_est = np.asarray(X_est, dtype=np.float64)
    if X_true.shape != X_est.shape:
        raise ValueError("shapes differ")
    denom = np.abs(X_true).sum()
    if denom == 0:
        raise ValueError("X_true has zero norm")
    return float(np.abs(X_true - X_est).sum() / denom)
