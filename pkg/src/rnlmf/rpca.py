"""Robust PCA baseline: low-rank plus sparse decomposition via inexact ALM.

Solves ``min ||L||_* + lam ||S||_1  s.t.  L + S = Xhat`` with the standard
augmented-Lagrangian iteration: singular value thresholding for ``L``,
soft thresholding for ``S``, a dual update, and a growing penalty.
"""

from dataclasses import dataclass

import numpy as np

from .prox import soft_threshold, svt
from .validation import check_matrix


@dataclass
class RpcaConfig:
    """ADMM controls; ``lam=None`` resolves to ``1/sqrt(n_columns)`` and
    ``mu0=None`` to ``1.25 / ||Xhat||_2``."""

    lam: float = None
    mu0: float = None
    mu_growth: float = 1.5
    max_iters: int = 500
    tol: float = 1e-7

    def validate(self):
        if self.lam is not None and not self.lam > 0:
            raise ValueError("lam must be positive")
        if self.mu0 is not None and not self.mu0 > 0:
            raise ValueError("mu0 must be positive")
        if not self.mu_growth > 1.0:
            raise ValueError("mu_growth must exceed 1")
        if self.max_iters < 1 or not self.tol > 0:
            raise ValueError("max_iters must be positive and tol > 0")
        return self


@dataclass
class RpcaResult:
    L: np.ndarray
    S: np.ndarray
    iterations: int
    converged: bool


def rpca_admm(Xhat, config=None):
    """Decompose ``Xhat`` into low-rank ``L`` and sparse ``S``.

    Runs until the relative feasibility residual ``||Xhat - L - S||_F /
    ||Xhat||_F`` drops below ``config.tol`` or ``config.max_iters`` is hit;
    the result carries the final iterate either way.
    """
    Xhat = check_matrix(Xhat, "Xhat")
    config = (config or RpcaConfig()).validate()
    n = Xhat.shape[1]
    lam = config.lam if config.lam is not None else 1.0 / np.sqrt(n)

    norm_f = np.linalg.norm(Xhat)
    if norm_f == 0.0:
        return RpcaResult(np.zeros_like(Xhat), np.zeros_like(Xhat), 0, True)
    norm_2 = np.linalg.norm(Xhat, 2)
    mu = config.mu0 if config.mu0 is not None else 1.25 / norm_2

    L = np.zeros_like(Xhat)
    S = np.zeros_like(Xhat)
    Y = np.zeros_like(Xhat)
    converged = False
    iters = 0
    for iters in range(1, config.max_iters + 1):
        L = svt(Xhat - S + Y / mu, 1.0 / mu)
        S = soft_threshold(Xhat - L + Y / mu, lam / mu)
        residual = Xhat - L - S
        Y += mu * residual
        mu *= config.mu_growth
        if np.linalg.norm(residual) / norm_f < config.tol:
            converged = True
            break
    return RpcaResult(L=L, S=S, iterations=iters, converged=converged)
