"""Scikit-learn style estimators wrapping the functional core.

Estimators follow the sklearn sample convention (rows are samples) and
transpose internally to the column-sample orientation the solver uses.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClusterMixin, TransformerMixin, clone
from sklearn.utils.validation import check_is_fitted

from .clustering import affinity_from_codes, sparsify_normalize, spectral_clustering
from .rpca import RpcaConfig, rpca_admm
from .solver import RnlmfConfig, fit_rnlmf, out_of_sample
from .validation import check_matrix


class RNLMF(BaseEstimator, TransformerMixin):
    """Robust non-linear matrix factorization as a transformer.

    ``fit`` separates the training matrix into a clean part, modeled through
    a kernel-space dictionary factorization, and a noise part.  ``transform``
    denoises new samples with the fitted dictionary frozen.

    Parameters mirror the solver configuration; ``n_atoms=None`` defaults to
    twice the feature count (capped by the sample count).

    Attributes
    ----------
    dictionary_ : ndarray of shape (n_atoms, n_features)
    codes_ : ndarray of shape (n_samples, n_atoms)
    noise_ : ndarray of shape (n_samples, n_features)
    denoised_ : ndarray of shape (n_samples, n_features)
    sigma_ : float
        Resolved kernel width.
    trace_ : FitTrace
        Objective values and step sizes per iteration.
    """

    def __init__(self, n_atoms=None, lambda_c=5e-3, lambda_e=1e-3,
                 penalty_c="frob", penalty_e="l1", sigma_scale=1.0, eta=0.5,
                 tau_d=1.0, mu=0.0, xi=1.0, max_iter=300, tol=1e-8,
                 strict_descent=False, use_scaled_d_step=False,
                 switch_penalty_after=0, random_state=0):
        self.n_atoms = n_atoms
        self.lambda_c = lambda_c
        self.lambda_e = lambda_e
        self.penalty_c = penalty_c
        self.penalty_e = penalty_e
        self.sigma_scale = sigma_scale
        self.eta = eta
        self.tau_d = tau_d
        self.mu = mu
        self.xi = xi
        self.max_iter = max_iter
        self.tol = tol
        self.strict_descent = strict_descent
        self.use_scaled_d_step = use_scaled_d_step
        self.switch_penalty_after = switch_penalty_after
        self.random_state = random_state

    def _config(self, n_samples, n_features):
        d = self.n_atoms if self.n_atoms is not None else min(2 * n_features, n_samples)
        return RnlmfConfig(
            d=d, lambda_c=self.lambda_c, lambda_e=self.lambda_e,
            penalty_c=self.penalty_c, penalty_e=self.penalty_e,
            sigma_scale=self.sigma_scale, eta=self.eta, tau_d=self.tau_d,
            mu=self.mu, xi=self.xi, max_iters=self.max_iter, tol=self.tol,
            strict_descent=self.strict_descent,
            use_scaled_d_step=self.use_scaled_d_step,
            switch_penalty_after=self.switch_penalty_after,
            seed=self.random_state,
        )

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        model = fit_rnlmf(X.T, self._config(*X.shape))
        self.model_ = model
        self.dictionary_ = model.D.T
        self.codes_ = model.C.T
        self.noise_ = model.E.T
        self.denoised_ = model.X_clean.T
        self.sigma_ = model.sigma
        self.trace_ = model.trace
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        """Denoise rows of ``X`` with the fitted dictionary."""
        clean, _, _ = self.decompose(X)
        return clean

    def decompose(self, X):
        """Denoise rows of ``X``; returns ``(denoised, codes, noise)``."""
        check_is_fitted(self, "model_")
        X = check_matrix(X, "X")
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        clean, codes, noise = out_of_sample(X.T, self.model_)
        return clean.T, codes.T, noise.T


class RNLMFClustering(BaseEstimator, ClusterMixin):
    """Subspace clustering through the factorization codes.

    Fits (a clone of) the ``factorizer`` to the data, builds a ridge
    self-representation affinity from its codes, sparsifies it to ``kappa``
    entries per column, and runs spectral clustering into ``n_clusters``.
    """

    def __init__(self, n_clusters, factorizer=None, kappa=10, gamma=0.01,
                 kmeans_restarts=20, random_state=0):
        self.n_clusters = n_clusters
        self.factorizer = factorizer
        self.kappa = kappa
        self.gamma = gamma
        self.kmeans_restarts = kmeans_restarts
        self.random_state = random_state

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        if self.kappa >= X.shape[0]:
            raise ValueError("kappa must be smaller than the number of samples")
        base = self.factorizer if self.factorizer is not None else RNLMF()
        factorizer = clone(base)
        if self.factorizer is None:
            factorizer.set_params(random_state=self.random_state)
        self.factorizer_ = factorizer.fit(X)
        A = affinity_from_codes(self.factorizer_.codes_.T, self.gamma)
        self.affinity_ = sparsify_normalize(A, self.kappa)
        self.labels_ = spectral_clustering(
            self.affinity_, self.n_clusters,
            restarts=self.kmeans_restarts, seed=self.random_state)
        return self


class RobustPCA(BaseEstimator):
    """Low-rank plus sparse decomposition of the fitted matrix.

    ``lam=None`` resolves to ``1/sqrt(n_samples)``.  ``fit_transform``
    returns the low-rank (denoised) part; there is no out-of-sample
    extension.
    """

    def __init__(self, lam=None, mu0=None, mu_growth=1.5, max_iter=500, tol=1e-7):
        self.lam = lam
        self.mu0 = mu0
        self.mu_growth = mu_growth
        self.max_iter = max_iter
        self.tol = tol

    def fit(self, X, y=None):
        X = check_matrix(X, "X")
        result = rpca_admm(X.T, RpcaConfig(
            lam=self.lam, mu0=self.mu0, mu_growth=self.mu_growth,
            max_iters=self.max_iter, tol=self.tol))
        self.low_rank_ = result.L.T
        self.sparse_ = result.S.T
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.n_features_in_ = X.shape[1]
        return self

    def fit_transform(self, X, y=None):
        return self.fit(X).low_rank_
