"""Alternating solver for robust non-linear matrix factorization.

An observed matrix ``Xhat`` (columns are points) is modeled as clean data
plus separable noise, ``Xhat = X + E``, where the Gaussian-kernel feature
image of ``X`` factors through a learned dictionary ``D`` with codes ``C``.
The objective

    J(D, C, E) = n/2 - Tr(C' K(D, Xhat - E)) + 1/2 Tr(C' K(D, D) C)
                 + lambda_c * R(C) + lambda_e * R(E)

is minimized block-wise: a closed form or proximal step for ``C``, a relaxed
Newton step with optional momentum for ``D``, and a proximal gradient step
for ``E``.  Only the RBF kernel is supported here (its self-similarities
collapse the data self-term to ``n/2`` and admit the closed-form gradients
below).
"""

from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import eigh

from .kernels import rbf_kernel, sigma_heuristic
from .prox import column_soft_threshold, ridge_solve, soft_threshold, svt
from .validation import check_matrix

C_PENALTIES = ("frob", "l1", "nuclear")
E_PENALTIES = ("frob", "l1", "l21")

# Per-step objective increases beyond _descent_tol() are treated as descent
# violations in strict mode.
_DESCENT_RTOL = 1e-10
_MAX_STEP_RETRIES = 10


class DivergenceError(RuntimeError):
    """Objective became non-finite; carries the trace collected so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


@dataclass
class RnlmfConfig:
    """Hyperparameters of the alternating solver.

    ``d`` is the number of dictionary atoms.  ``penalty_c`` is one of
    ``frob`` (closed-form ridge update), ``l1``, ``nuclear``; ``penalty_e``
    one of ``frob``, ``l1`` (sparse noise), ``l21`` (column-wise noise).
    ``sigma_scale`` multiplies the mean-pairwise-distance bandwidth
    heuristic.  ``eta`` is the momentum on the dictionary step, ``tau_d``
    its step damping, ``mu`` the ridge added to the curvature surrogate and
    ``xi`` the safety factor on the noise-step Lipschitz estimate.  With
    ``strict_descent`` every block update must not increase the objective;
    violating steps are retried with doubled damping (up to 10 times, the
    momentum buffer reset) and finally rejected.  ``use_scaled_d_step``
    replaces the surrogate inverse by its spectral norm.  A positive
    ``switch_penalty_after`` runs the first iterations with the ``frob``
    code update before switching to ``penalty_c`` (trace objectives follow
    the active penalty).
    """

    d: int
    lambda_c: float = 5e-3
    lambda_e: float = 1e-3
    penalty_c: str = "frob"
    penalty_e: str = "l1"
    sigma_scale: float = 1.0
    eta: float = 0.5
    tau_d: float = 1.0
    mu: float = 0.0
    xi: float = 1.0
    max_iters: int = 300
    tol: float = 1e-8
    strict_descent: bool = False
    seed: int = 0
    use_scaled_d_step: bool = False
    switch_penalty_after: int = 0

    def validate(self):
        if self.d < 1:
            raise ValueError(f"d must be a positive integer, got {self.d}")
        if not self.lambda_c > 0 or not self.lambda_e > 0:
            raise ValueError("lambda_c and lambda_e must be positive")
        if self.penalty_c not in C_PENALTIES:
            raise ValueError(f"penalty_c must be one of {C_PENALTIES}")
        if self.penalty_e not in E_PENALTIES:
            raise ValueError(f"penalty_e must be one of {E_PENALTIES}")
        if not self.sigma_scale > 0:
            raise ValueError("sigma_scale must be positive")
        if not 0.0 <= self.eta < 1.0:
            raise ValueError(f"eta must lie in [0, 1), got {self.eta}")
        if self.tau_d < 1.0:
            raise ValueError(f"tau_d must be >= 1, got {self.tau_d}")
        if self.mu < 0.0:
            raise ValueError(f"mu must be >= 0, got {self.mu}")
        if self.xi < 1.0:
            raise ValueError(f"xi must be >= 1, got {self.xi}")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if not self.tol > 0:
            raise ValueError("tol must be positive")
        if self.switch_penalty_after < 0:
            raise ValueError("switch_penalty_after must be >= 0")
        return self


@dataclass
class FitTrace:
    """Per-iteration objective values and successive-iterate differences."""

    objective: list = field(default_factory=list)
    step_diffs: list = field(default_factory=list)
    iterations_run: int = 0
    converged: bool = False
    # (J after C, after D, after E) per iteration; filled in strict mode.
    block_objectives: list = field(default_factory=list)
    notes: list = field(default_factory=list)


@dataclass
class RnlmfModel:
    """Fitted factorization: dictionary, codes, separated noise, and trace."""

    D: np.ndarray
    C: np.ndarray
    E: np.ndarray
    X_clean: np.ndarray
    sigma: float
    config: RnlmfConfig
    trace: FitTrace


def _penalty_value(M, kind):
    if kind == "frob":
        return 0.5 * float(np.sum(M * M))
    if kind == "l1":
        return float(np.sum(np.abs(M)))
    if kind == "nuclear":
        return float(np.sum(np.linalg.svd(M, compute_uv=False)))
    if kind == "l21":
        return float(np.sum(np.linalg.norm(M, axis=0)))
    raise ValueError(f"unknown penalty {kind!r}")


def _objective_from_kernels(kdd, kdy, C, E, lambda_c, lambda_e, penalty_c, penalty_e):
    n = kdy.shape[1]
    loss = 0.5 * n - float(np.sum(C * kdy)) + 0.5 * float(np.sum(C * (kdd @ C)))
    return (
        loss
        + lambda_c * _penalty_value(C, penalty_c)
        + lambda_e * _penalty_value(E, penalty_e)
    )


def objective(D, C, E, Xhat, sigma, lambda_c, lambda_e, penalty_c="frob", penalty_e="l1"):
    """Evaluate J at ``(D, C, E)`` for the given data and penalties."""
    Y = Xhat - E
    kdd = rbf_kernel(D, None, sigma)
    kdy = rbf_kernel(D, Y, sigma)
    return _objective_from_kernels(kdd, kdy, C, E, lambda_c, lambda_e, penalty_c, penalty_e)


def grad_D(D, C, E, Xhat, sigma, kdd=None, kyd=None):
    """Exact dictionary gradient of the loss and its curvature surrogate.

    Returns ``(gradient, H)`` where ``H`` is the d x d surrogate Hessian
    obtained by freezing the kernel-weighted code correlations.
    """
    Y = Xhat - E
    if kyd is None:
        kyd = rbf_kernel(Y, D, sigma)
    if kdd is None:
        kdd = rbf_kernel(D, None, sigma)
    coef = 2.0 / sigma**2
    W1 = -C.T * kyd
    w1 = W1.sum(axis=0)
    W2 = (0.5 * (C @ C.T)) * kdd
    w2 = W2.sum(axis=0)
    grad = coef * (Y @ W1 - D * w1[None, :]) + 2.0 * coef * (D @ W2 - D * w2[None, :])
    H = coef * (2.0 * W2 - np.diag(w1 + 2.0 * w2))
    return grad, H


def grad_E(D, C, E, Xhat, sigma, xi=1.0, kdy=None):
    """Exact noise gradient of the loss and the proximal step size ``tau_e``.

    ``tau_e`` is ``xi`` times the Lipschitz estimate built from the column
    sums of the kernel-weighted codes; it is zero iff ``C`` is zero, in
    which case the caller must skip the noise update.
    """
    Y = Xhat - E
    if kdy is None:
        kdy = rbf_kernel(D, Y, sigma)
    coef = 2.0 / sigma**2
    W3 = -C * kdy
    w3 = W3.sum(axis=0)
    grad = coef * (Y * w3[None, :] - D @ W3)
    tau_e = xi * coef * float(np.max(np.abs(w3))) if w3.size else 0.0
    return grad, tau_e


def psd_spectral_norm(K, iters=50, seed=0):
    """Power-iteration estimate of the largest eigenvalue of a PSD matrix."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(K.shape[0])
    v /= np.linalg.norm(v)
    for _ in range(iters):
        w = K @ v
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
    return float(v @ (K @ v))


def code_step_size(kdd):
    """Step size for the proximal code update: 1.01 x the Gram spectral norm."""
    return 1.01 * psd_spectral_norm(kdd)


def update_C(D, E, Xhat, sigma, lambda_c, penalty_c="frob", C_prev=None,
             kdd=None, kdy=None, tau_c=None):
    """One code update: ridge closed form or a proximal gradient step."""
    if kdd is None:
        kdd = rbf_kernel(D, None, sigma)
    if kdy is None:
        kdy = rbf_kernel(D, Xhat - E, sigma)
    if penalty_c == "frob":
        return ridge_solve(kdd, kdy, lambda_c)
    if C_prev is None:
        raise ValueError(f"penalty_c={penalty_c!r} requires C_prev")
    if tau_c is None:
        tau_c = code_step_size(kdd)
    grad = -kdy + kdd @ C_prev
    G = C_prev - grad / tau_c
    if penalty_c == "l1":
        return soft_threshold(G, lambda_c / tau_c)
    if penalty_c == "nuclear":
        return svt(G, lambda_c / tau_c)
    raise ValueError(f"unknown penalty_c {penalty_c!r}")


def update_D(D_prev, gradient, H, delta_prev, eta=0.5, tau_d=1.0, mu=0.0,
             use_scaled_step=False):
    """One dictionary update: momentum plus a relaxed Newton (or scaled) step.

    Returns ``(D_new, delta_new)``.  If ``H + mu*I`` is not positive
    definite, ``mu`` is raised to ``|lambda_min| + 1e-8`` for this step.
    """
    w, V = eigh(0.5 * (H + H.T))
    if use_scaled_step:
        h_norm = float(np.max(np.abs(w))) if w.size else 0.0
        step = gradient / (tau_d * h_norm) if h_norm > 0 else np.zeros_like(gradient)
    else:
        mu_eff = mu
        if w[0] + mu <= 0.0:
            mu_eff = abs(w[0]) + 1e-8
        step = (gradient @ V) * (1.0 / (tau_d * (w + mu_eff)))[None, :] @ V.T
    delta_new = eta * delta_prev + step
    D_new = D_prev - delta_new
    if not np.all(np.isfinite(D_new)):
        raise DivergenceError("dictionary update produced non-finite entries")
    return D_new, delta_new


def update_E(E_prev, gradient, tau_e, lambda_e, penalty_e="l1"):
    """One noise update: proximal step on ``E_prev - gradient / tau_e``."""
    if not tau_e > 0:
        raise ValueError("tau_e must be positive; a zero tau_e means skip the update")
    G = E_prev - gradient / tau_e
    if penalty_e == "frob":
        return (tau_e / (tau_e + lambda_e)) * G
    if penalty_e == "l1":
        return soft_threshold(G, lambda_e / tau_e)
    if penalty_e == "l21":
        return column_soft_threshold(G, lambda_e / tau_e)
    raise ValueError(f"unknown penalty_e {penalty_e!r}")


def _descent_tol(J):
    return _DESCENT_RTOL * (1.0 + abs(J))


def fit_rnlmf(Xhat, config):
    """Fit the factorization to ``Xhat`` (columns are points).

    Initializes the noise and codes at zero and the dictionary with seeded
    standard-normal entries, resolves the kernel width from the bandwidth
    heuristic, then alternates code, dictionary, and noise updates until the
    relative objective change drops below ``config.tol`` or
    ``config.max_iters`` is reached.
    """
    Xhat = check_matrix(Xhat, "Xhat")
    config.validate()
    m, n = Xhat.shape
    if config.d > n:
        raise ValueError(f"d={config.d} exceeds the number of columns n={n}")

    rng = np.random.default_rng(config.seed)
    D = rng.standard_normal((m, config.d))
    C = np.zeros((config.d, n))
    E = np.zeros((m, n))
    delta = np.zeros((m, config.d))
    sigma = sigma_heuristic(Xhat, config.sigma_scale, seed=config.seed)

    trace = FitTrace()
    strict = config.strict_descent
    lam_c, lam_e = config.lambda_c, config.lambda_e
    pen_e = config.penalty_e

    Y = Xhat.copy()
    kdd = rbf_kernel(D, None, sigma)
    kdy = rbf_kernel(D, Y, sigma)
    J_prev_iter = _objective_from_kernels(kdd, kdy, C, E, lam_c, lam_e,
                                          config.penalty_c, pen_e)

    def block_objective(kdd_, kdy_, C_, E_, pen_c_):
        return _objective_from_kernels(kdd_, kdy_, C_, E_, lam_c, lam_e, pen_c_, pen_e)

    for t in range(1, config.max_iters + 1):
        pen_c = "frob" if t <= config.switch_penalty_after else config.penalty_c
        J_block = (block_objective(kdd, kdy, C, E, pen_c)
                   if (strict or t == 1 + config.switch_penalty_after)
                   else J_prev_iter)

        # ---- code update -------------------------------------------------
        tau_c = None if pen_c == "frob" else code_step_size(kdd)
        C_new = update_C(D, E, Xhat, sigma, lam_c, pen_c, C_prev=C,
                         kdd=kdd, kdy=kdy, tau_c=tau_c)
        if strict:
            J_c = block_objective(kdd, kdy, C_new, E, pen_c)
            retries = 0
            while J_c > J_block + _descent_tol(J_block) and retries < _MAX_STEP_RETRIES:
                if pen_c == "frob":
                    break  # exact minimizer; nothing to damp
                retries += 1
                tau_c *= 2.0
                C_new = update_C(D, E, Xhat, sigma, lam_c, pen_c, C_prev=C,
                                 kdd=kdd, kdy=kdy, tau_c=tau_c)
                J_c = block_objective(kdd, kdy, C_new, E, pen_c)
            if J_c > J_block + _descent_tol(J_block):
                trace.notes.append(f"iter {t}: code step rejected (dJ={J_c - J_block:.3e})")
                C_new, J_c = C, J_block
            J_block = J_c
        dC = float(np.linalg.norm(C_new - C))
        C = C_new

        # ---- dictionary update -------------------------------------------
        gradient, H = grad_D(D, C, E, Xhat, sigma, kdd=kdd, kyd=kdy.T)
        if not (np.all(np.isfinite(gradient)) and np.all(np.isfinite(H))):
            trace.iterations_run = t
            raise DivergenceError("non-finite dictionary gradient", trace)
        tau_d = config.tau_d
        D_new, delta_new = update_D(D, gradient, H, delta, eta=config.eta,
                                    tau_d=tau_d, mu=config.mu,
                                    use_scaled_step=config.use_scaled_d_step)
        kdd_new = rbf_kernel(D_new, None, sigma)
        kdy_new = rbf_kernel(D_new, Y, sigma)
        if strict:
            J_d = block_objective(kdd_new, kdy_new, C, E, pen_c)
            retries = 0
            while J_d > J_block + _descent_tol(J_block) and retries < _MAX_STEP_RETRIES:
                retries += 1
                tau_d *= 2.0
                # Momentum is reset when a step has to be retried.
                D_new, delta_new = update_D(D, gradient, H, np.zeros_like(delta),
                                            eta=0.0, tau_d=tau_d, mu=config.mu,
                                            use_scaled_step=config.use_scaled_d_step)
                kdd_new = rbf_kernel(D_new, None, sigma)
                kdy_new = rbf_kernel(D_new, Y, sigma)
                J_d = block_objective(kdd_new, kdy_new, C, E, pen_c)
            if J_d > J_block + _descent_tol(J_block):
                trace.notes.append(
                    f"iter {t}: dictionary step rejected (dJ={J_d - J_block:.3e})")
                D_new, delta_new = D, np.zeros_like(delta)
                kdd_new, kdy_new, J_d = kdd, kdy, J_block
            J_block = J_d
        dD = float(np.linalg.norm(D_new - D))
        D, delta, kdd, kdy = D_new, delta_new, kdd_new, kdy_new

        # ---- noise update (kdy currently pairs D with the old noise) -----
        gradient_e, tau_e = grad_E(D, C, E, Xhat, sigma, xi=config.xi, kdy=kdy)
        dE = 0.0
        if tau_e > 0.0:
            E_new = update_E(E, gradient_e, tau_e, lam_e, pen_e)
            Y_new = Xhat - E_new
            kdy_after = rbf_kernel(D, Y_new, sigma)
            if strict:
                J_e = block_objective(kdd, kdy_after, C, E_new, pen_c)
                retries = 0
                while J_e > J_block + _descent_tol(J_block) and retries < _MAX_STEP_RETRIES:
                    retries += 1
                    tau_e *= 2.0
                    E_new = update_E(E, gradient_e, tau_e, lam_e, pen_e)
                    Y_new = Xhat - E_new
                    kdy_after = rbf_kernel(D, Y_new, sigma)
                    J_e = block_objective(kdd, kdy_after, C, E_new, pen_c)
                if J_e > J_block + _descent_tol(J_block):
                    trace.notes.append(
                        f"iter {t}: noise step rejected (dJ={J_e - J_block:.3e})")
                    E_new, Y_new, kdy_after, J_e = E, Y, kdy, J_block
                J_block = J_e
            dE = float(np.linalg.norm(E_new - E))
            E, Y, kdy = E_new, Y_new, kdy_after

        J = J_block if strict else block_objective(kdd, kdy, C, E, pen_c)
        trace.objective.append(J)
        trace.step_diffs.append((dC, dD, dE))
        if strict:
            trace.block_objectives.append((J_c, J_d, J_block))
        trace.iterations_run = t
        if not np.isfinite(J):
            raise DivergenceError(f"objective diverged at iteration {t}", trace)
        if abs(J - J_prev_iter) / (1.0 + abs(J_prev_iter)) < config.tol:
            trace.converged = True
            J_prev_iter = J
            break
        J_prev_iter = J

    return RnlmfModel(D=D, C=C, E=E, X_clean=Xhat - E, sigma=sigma,
                      config=config, trace=trace)


def out_of_sample(Xhat_new, model, max_iters=None, tol=None):
    """Denoise new columns with the fitted dictionary frozen.

    Alternates the code and noise updates only (the dictionary and kernel
    width come from ``model``) and returns ``(X_clean, C, E)``.
    """
    return denoise_with_dictionary(Xhat_new, model.D, model.sigma, model.config,
                                   max_iters=max_iters, tol=tol)


def denoise_with_dictionary(Xhat_new, D, sigma, config, max_iters=None, tol=None):
    """Code/noise alternation against a frozen dictionary ``D`` of width ``sigma``."""
    Xhat_new = check_matrix(Xhat_new, "Xhat_new")
    D = check_matrix(D, "D")
    cfg = config
    if Xhat_new.shape[0] != D.shape[0]:
        raise ValueError(
            f"Xhat_new has {Xhat_new.shape[0]} rows but the dictionary has {D.shape[0]}")
    max_iters = cfg.max_iters if max_iters is None else max_iters
    tol = cfg.tol if tol is None else tol

    n = Xhat_new.shape[1]
    C = np.zeros((D.shape[1], n))
    E = np.zeros_like(Xhat_new)
    Y = Xhat_new.copy()
    kdd = rbf_kernel(D, None, sigma)
    kdy = rbf_kernel(D, Y, sigma)
    tau_c = None if cfg.penalty_c == "frob" else code_step_size(kdd)
    J_prev = _objective_from_kernels(kdd, kdy, C, E, cfg.lambda_c, cfg.lambda_e,
                                     cfg.penalty_c, cfg.penalty_e)
    for t in range(1, max_iters + 1):
        C = update_C(D, E, Xhat_new, sigma, cfg.lambda_c, cfg.penalty_c,
                     C_prev=C, kdd=kdd, kdy=kdy, tau_c=tau_c)
        gradient_e, tau_e = grad_E(D, C, E, Xhat_new, sigma, xi=cfg.xi, kdy=kdy)
        if tau_e > 0.0:
            E = update_E(E, gradient_e, tau_e, cfg.lambda_e, cfg.penalty_e)
            Y = Xhat_new - E
        kdy = rbf_kernel(D, Y, sigma)
        J = _objective_from_kernels(kdd, kdy, C, E, cfg.lambda_c, cfg.lambda_e,
                                    cfg.penalty_c, cfg.penalty_e)
        if not np.isfinite(J):
            raise DivergenceError(f"out-of-sample objective diverged at iteration {t}")
        if abs(J - J_prev) / (1.0 + abs(J_prev)) < tol:
            break
        J_prev = J
    return Xhat_new - E, C, E


def default_config(Xhat, d=None, **overrides):
    """Config with ``d`` defaulting to twice the row count (capped by columns)."""
    Xhat = check_matrix(Xhat, "Xhat")
    m, n = Xhat.shape
    if d is None:
        d = min(2 * m, n)
    return replace(RnlmfConfig(d=d), **overrides)
