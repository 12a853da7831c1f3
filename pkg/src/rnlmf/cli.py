"""Command-line front end: synthesize, denoise, cluster, and benchmark.

Matrices on disk are headerless CSV with columns as data points.  Options
may also come from a ``key = value`` config file (``--config``); explicit
flags win.  The environment variable ``RNLMF_THREADS`` caps the BLAS/OpenMP
thread pools for the duration of a command.

Exit codes: 0 success, 1 usage or I/O error, 2 numeric failure.
"""

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from .clustering import (affinity_from_codes, clustering_error,
                         sparsify_normalize, spectral_clustering)
from .datagen import NoiseSpec, SynthSpec, apply_noise, mae, rmse, sample_manifold_union
from .matrix_io import (MatrixIOError, read_config_file, read_labels, read_matrix,
                        write_labels, write_matrix, write_metrics)
from .rpca import RpcaConfig, rpca_admm
from .solver import (DivergenceError, RnlmfConfig, denoise_with_dictionary, fit_rnlmf)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2

NOISE_KINDS = ("sparse", "column", "saltpepper", "occlusion")


def _derived_seed(*parts):
    """Deterministic child seed from a tuple of integers."""
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def _parse_bool(raw):
    value = raw.strip().lower()
    if value in ("1", "true", "yes", "on"):
        return True
    if value in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"cannot parse {raw!r} as a boolean")


class _Options:
    """Resolve option values: explicit flag, then config file, then default."""

    def __init__(self, args):
        self.args = args
        self.file = {}
        config_path = getattr(args, "config", None)
        if config_path:
            self.file = read_config_file(config_path)

    def get(self, name, cast, default=None, required=False):
        value = getattr(self.args, name, None)
        if value is None and name in self.file:
            value = _parse_bool(self.file[name]) if cast is bool else cast(self.file[name])
        if value is None:
            if required:
                raise ValueError(f"missing required option --{name.replace('_', '-')}")
            value = default
        return value

    def flag(self, name):
        if getattr(self.args, name, False):
            return True
        if name in self.file:
            return _parse_bool(self.file[name])
        return False


def _out_dir(options):
    out = Path(options.get("out_dir", str, "."))
    out.mkdir(parents=True, exist_ok=True)
    return out


def _add_common(parser):
    parser.add_argument("--out-dir", dest="out_dir", help="output directory (default .)")
    parser.add_argument("--seed", type=int, help="random seed (default 0)")
    parser.add_argument("--config", help="key = value config file; flags override")


def _add_solver_options(parser, with_dictionary=True):
    if with_dictionary:
        parser.add_argument("--d", type=int, help="number of dictionary atoms")
    parser.add_argument("--lambda-c", dest="lambda_c", type=float,
                        help="code penalty weight (default 5e-3)")
    parser.add_argument("--lambda-e", dest="lambda_e", type=float,
                        help="noise penalty weight (default 1e-3)")
    parser.add_argument("--penalty-c", dest="penalty_c",
                        choices=("frob", "l1", "nuclear"),
                        help="code penalty (default frob)")
    parser.add_argument("--penalty-e", dest="penalty_e",
                        choices=("frob", "l1", "l21"),
                        help="noise penalty (default l1)")
    parser.add_argument("--sigma-scale", dest="sigma_scale", type=float,
                        help="bandwidth heuristic scale (default 1)")
    parser.add_argument("--eta", type=float, help="dictionary momentum (default 0.5)")
    parser.add_argument("--tau-d", dest="tau_d", type=float,
                        help="dictionary step damping (default 1)")
    parser.add_argument("--mu", type=float, help="curvature ridge (default 0)")
    parser.add_argument("--xi", type=float, help="noise step safety factor (default 1)")
    parser.add_argument("--max-iters", dest="max_iters", type=int,
                        help="iteration cap (default 300)")
    parser.add_argument("--tol", type=float,
                        help="relative objective tolerance (default 1e-8)")
    parser.add_argument("--strict-descent", dest="strict_descent", action="store_true",
                        help="enforce per-block objective descent")
    parser.add_argument("--use-scaled-d-step", dest="use_scaled_d_step",
                        action="store_true",
                        help="replace the curvature inverse by its spectral norm")
    parser.add_argument("--switch-penalty-after", dest="switch_penalty_after", type=int,
                        help="iterations of frob code updates before penalty-c kicks in")


def _solver_config(options, d):
    return RnlmfConfig(
        d=d,
        lambda_c=options.get("lambda_c", float, 5e-3),
        lambda_e=options.get("lambda_e", float, 1e-3),
        penalty_c=options.get("penalty_c", str, "frob"),
        penalty_e=options.get("penalty_e", str, "l1"),
        sigma_scale=options.get("sigma_scale", float, 1.0),
        eta=options.get("eta", float, 0.5),
        tau_d=options.get("tau_d", float, 1.0),
        mu=options.get("mu", float, 0.0),
        xi=options.get("xi", float, 1.0),
        max_iters=options.get("max_iters", int, 300),
        tol=options.get("tol", float, 1e-8),
        strict_descent=options.flag("strict_descent"),
        use_scaled_d_step=options.flag("use_scaled_d_step"),
        switch_penalty_after=options.get("switch_penalty_after", int, 0),
        seed=options.get("seed", int, 0),
    )


def _write_trace(path, trace):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,objective,delta_c,delta_d,delta_e\n")
        for i, (J, diffs) in enumerate(zip(trace.objective, trace.step_diffs), start=1):
            fields = [str(i)] + [f"{v:.17g}" for v in (J, *diffs)]
            fh.write(",".join(fields) + "\n")


# ---------------------------------------------------------------------------
# subcommands


def _cmd_synth(args):
    options = _Options(args)
    out = _out_dir(options)
    k = options.get("k", int, required=True)
    seed = options.get("seed", int, 0)
    spec = SynthSpec(
        k=k,
        r=options.get("r", int, 3),
        p=options.get("p", int, 3),
        m=options.get("m", int, 30),
        samples_per_manifold=options.get("samples", int, 300),
        shuffle=options.flag("shuffle"),
        seed=seed,
    )
    X, labels = sample_manifold_union(spec)

    kinds = [s.strip() for s in options.get("noise", str, "sparse").split(",") if s.strip()]
    for kind in kinds:
        if kind not in NOISE_KINDS:
            raise ValueError(f"unknown noise kind {kind!r}; choose from {NOISE_KINDS}")
    Xhat = X
    # Composed injectors apply left to right (e.g. "saltpepper,occlusion").
    for idx, kind in enumerate(kinds):
        noise = NoiseSpec(
            kind=kind,
            rho=options.get("rho", float, 0.3),
            sigma_e_ratio=options.get("sigma_e_ratio", float, 1.0),
            density=options.get("density", float, 0.25),
            block_scale=options.get("block_scale", float, 0.25),
            image_h=options.get("image_h", int, 0),
            image_w=options.get("image_w", int, 0),
            seed=_derived_seed(seed, 1, idx),
        )
        Xhat, _ = apply_noise(Xhat, noise)

    write_matrix(out / "X.csv", X)
    write_matrix(out / "Xhat.csv", Xhat)
    write_matrix(out / "E.csv", Xhat - X)
    write_labels(out / "labels.csv", labels)
    print(f"wrote {X.shape[0]}x{X.shape[1]} matrices to {out}")
    return EXIT_OK


def _cmd_denoise(args):
    options = _Options(args)
    out = _out_dir(options)
    Xhat = read_matrix(options.get("input", str, required=True)).copy()
    config = _solver_config(options, options.get("d", int, required=True))
    model = fit_rnlmf(Xhat, config)

    write_matrix(out / "Xclean.csv", model.X_clean)
    write_matrix(out / "D.csv", model.D)
    write_matrix(out / "C.csv", model.C)
    write_matrix(out / "E.csv", model.E)
    _write_trace(out / "trace.csv", model.trace)

    metrics = {
        "iterations": model.trace.iterations_run,
        "converged": model.trace.converged,
        "sigma": model.sigma,
        "objective": model.trace.objective[-1],
    }
    truth_path = options.get("truth", str)
    if truth_path:
        X = read_matrix(truth_path)
        metrics["rmse"] = rmse(X, model.X_clean)
        metrics["mae"] = mae(X, model.X_clean)
    write_metrics(out / "metrics.txt", metrics)
    for key, value in metrics.items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_ose(args):
    options = _Options(args)
    out = _out_dir(options)
    Xhat = read_matrix(options.get("input", str, required=True))
    D = read_matrix(options.get("dict", str, required=True))
    sigma = options.get("sigma", float, required=True)
    config = RnlmfConfig(
        d=D.shape[1],
        lambda_c=options.get("lambda_c", float, 5e-3),
        lambda_e=options.get("lambda_e", float, 1e-3),
        penalty_c=options.get("penalty_c", str, "frob"),
        penalty_e=options.get("penalty_e", str, "l1"),
        xi=options.get("xi", float, 1.0),
        max_iters=options.get("max_iters", int, 300),
        tol=options.get("tol", float, 1e-8),
    )
    X_clean, C, E = denoise_with_dictionary(Xhat, D, sigma, config)
    write_matrix(out / "Xclean.csv", X_clean)
    write_matrix(out / "C.csv", C)
    write_matrix(out / "E.csv", E)
    metrics = {"sigma": sigma, "atoms": D.shape[1]}
    truth_path = options.get("truth", str)
    if truth_path:
        X = read_matrix(truth_path)
        metrics["rmse"] = rmse(X, X_clean)
        metrics["mae"] = mae(X, X_clean)
    write_metrics(out / "metrics.txt", metrics)
    for key, value in metrics.items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_cluster(args):
    options = _Options(args)
    out = _out_dir(options)
    Xhat = read_matrix(options.get("input", str, required=True))
    k = options.get("k", int, required=True)
    kappa = options.get("kappa", int, 10)
    gamma = options.get("gamma", float, 0.01)
    restarts = options.get("kmeans_restarts", int, 20)
    seed = options.get("seed", int, 0)

    config = _solver_config(options, options.get("d", int, required=True))
    model = fit_rnlmf(Xhat, config)
    affinity = sparsify_normalize(affinity_from_codes(model.C, gamma), kappa)
    labels = spectral_clustering(affinity, k, restarts=restarts, seed=seed)
    write_labels(out / "labels.csv", labels)

    degrees = affinity.sum(axis=1)
    metrics = {
        "n": affinity.shape[0],
        "clusters": k,
        "affinity_nonzeros": int(np.count_nonzero(affinity)),
        "affinity_mean_degree": float(degrees.mean()),
        "affinity_max_entry": float(affinity.max()),
    }
    truth_path = options.get("truth", str)
    if truth_path:
        truth = read_labels(truth_path)
        metrics["clustering_error"] = clustering_error(labels, truth, k)
    write_metrics(out / "metrics.txt", metrics)
    for key, value in metrics.items():
        print(f"{key}: {value}")
    return EXIT_OK


def _cmd_rpca(args):
    options = _Options(args)
    out = _out_dir(options)
    Xhat = read_matrix(options.get("input", str, required=True))
    config = RpcaConfig(
        lam=options.get("lam", float),
        mu0=options.get("mu0", float),
        mu_growth=options.get("mu_growth", float, 1.5),
        max_iters=options.get("max_iters", int, 500),
        tol=options.get("tol", float, 1e-7),
    )
    result = rpca_admm(Xhat, config)
    write_matrix(out / "L.csv", result.L)
    write_matrix(out / "S.csv", result.S)
    residual = np.linalg.norm(Xhat - result.L - result.S)
    denom = np.linalg.norm(Xhat)
    metrics = {
        "iterations": result.iterations,
        "converged": result.converged,
        "residual": float(residual / denom) if denom > 0 else 0.0,
    }
    truth_path = options.get("truth", str)
    if truth_path:
        X = read_matrix(truth_path)
        metrics["rmse"] = rmse(X, result.L)
        metrics["mae"] = mae(X, result.L)
    write_metrics(out / "metrics.txt", metrics)
    for key, value in metrics.items():
        print(f"{key}: {value}")
    return EXIT_OK


def _bench_one(k, rho, noise_kind, sigma_e_ratio, options, run_seed, spec_overrides):
    spec = SynthSpec(k=k, seed=_derived_seed(run_seed, 2), **spec_overrides)
    X, _ = sample_manifold_union(spec)
    noise = NoiseSpec(kind=noise_kind, rho=rho, sigma_e_ratio=sigma_e_ratio,
                      seed=_derived_seed(run_seed, 3))
    Xhat, _ = apply_noise(X, noise)

    d = options.get("d", int, 2 * spec.m * k)
    default_pen_e = "l21" if noise_kind == "column" else "l1"
    config = RnlmfConfig(
        d=d,
        lambda_c=options.get("lambda_c", float, 5e-3),
        lambda_e=options.get("lambda_e", float, 1e-3),
        penalty_c=options.get("penalty_c", str, "frob"),
        penalty_e=options.get("penalty_e", str, default_pen_e),
        sigma_scale=options.get("sigma_scale", float, 1.0),
        eta=options.get("eta", float, 0.5),
        max_iters=options.get("max_iters", int, 300),
        tol=options.get("tol", float, 1e-8),
        seed=_derived_seed(run_seed, 4),
    )
    model = fit_rnlmf(Xhat, config)
    rpca_result = rpca_admm(Xhat, RpcaConfig(lam=options.get("rpca_lambda", float)))
    return {
        "rnlmf": rmse(X, model.X_clean),
        "rpca": rmse(X, rpca_result.L),
        "identity": rmse(X, Xhat),
    }


def _cmd_bench(args):
    if args.mode != "synthetic":
        raise ValueError(f"unknown bench mode {args.mode!r}")
    options = _Options(args)
    out = _out_dir(options)
    k = options.get("k", int, required=True)
    seeds = options.get("seeds", int, 5)
    base_seed = options.get("seed", int, 0)
    noise_kind = options.get("noise", str, "sparse")
    if noise_kind not in ("sparse", "column"):
        raise ValueError("bench supports --noise sparse or column")
    sigma_e_ratio = options.get("sigma_e_ratio", float, 1.0)
    rho_grid = [float(s) for s in options.get("rho_grid", str, "0.1,0.3,0.5").split(",")]
    spec_overrides = {
        "r": options.get("r", int, 3),
        "p": options.get("p", int, 3),
        "m": options.get("m", int, 30),
        "samples_per_manifold": options.get("samples", int, 300),
    }

    rows = []
    for rho_index, rho in enumerate(rho_grid):
        per_method = {"rnlmf": [], "rpca": [], "identity": []}
        for trial in range(seeds):
            run_seed = _derived_seed(base_seed, rho_index, trial)
            result = _bench_one(k, rho, noise_kind, sigma_e_ratio, options,
                                run_seed, spec_overrides)
            for method, value in result.items():
                per_method[method].append(value)
        for method in sorted(per_method):
            values = np.asarray(per_method[method])
            std = float(values.std(ddof=1)) if values.size > 1 else 0.0
            rows.append((rho, method, float(values.mean()), std))

    rows.sort(key=lambda row: (row[0], row[1]))
    with open(out / "bench.csv", "w", encoding="utf-8") as fh:
        fh.write("rho,method,mean_rmse,std_rmse\n")
        for rho, method, mean, std in rows:
            fh.write(f"{rho:.17g},{method},{mean:.17g},{std:.17g}\n")

    print(f"{'rho':>6}  {'method':<8}  {'mean_rmse':>10}  {'std_rmse':>10}")
    for rho, method, mean, std in rows:
        print(f"{rho:>6.3g}  {method:<8}  {mean:>10.4f}  {std:>10.4f}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def build_parser():
    parser = argparse.ArgumentParser(
        prog="rnlmf",
        description="Robust non-linear matrix factorization: denoising, "
                    "dictionary learning, and subspace clustering on CSV matrices.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate synthetic data and inject noise")
    p.add_argument("--k", type=int, help="number of manifolds")
    p.add_argument("--noise", help="comma-separated injectors: sparse, column, "
                                   "saltpepper, occlusion (default sparse)")
    p.add_argument("--rho", type=float,
                   help="corrupted fraction of entries/columns (default 0.3)")
    p.add_argument("--sigma-e-ratio", dest="sigma_e_ratio", type=float,
                   help="noise-to-data standard deviation ratio (default 1)")
    p.add_argument("--density", type=float,
                   help="salt-and-pepper per-column density (default 0.25)")
    p.add_argument("--block-scale", dest="block_scale", type=float,
                   help="occlusion block scale (default 0.25)")
    p.add_argument("--image-h", dest="image_h", type=int, help="occlusion image height")
    p.add_argument("--image-w", dest="image_w", type=int, help="occlusion image width")
    p.add_argument("--m", type=int, help="ambient dimension (default 30)")
    p.add_argument("--r", type=int, help="latent dimension (default 3)")
    p.add_argument("--p", type=int, help="polynomial order (default 3)")
    p.add_argument("--samples", type=int, help="samples per manifold (default 300)")
    p.add_argument("--shuffle", action="store_true", help="permute columns")
    _add_common(p)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("denoise", help="fit the factorization and separate noise")
    p.add_argument("--input", help="noisy matrix CSV")
    p.add_argument("--truth", help="clean matrix CSV for metrics")
    _add_solver_options(p)
    _add_common(p)
    p.set_defaults(func=_cmd_denoise)

    p = sub.add_parser("ose", help="denoise new columns with a fitted dictionary")
    p.add_argument("--input", help="new noisy matrix CSV")
    p.add_argument("--dict", help="dictionary CSV from a previous fit")
    p.add_argument("--sigma", type=float, help="kernel width from the fit")
    p.add_argument("--truth", help="clean matrix CSV for metrics")
    p.add_argument("--lambda-c", dest="lambda_c", type=float)
    p.add_argument("--lambda-e", dest="lambda_e", type=float)
    p.add_argument("--penalty-c", dest="penalty_c", choices=("frob", "l1", "nuclear"))
    p.add_argument("--penalty-e", dest="penalty_e", choices=("frob", "l1", "l21"))
    p.add_argument("--xi", type=float)
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tol", type=float)
    _add_common(p)
    p.set_defaults(func=_cmd_ose)

    p = sub.add_parser("cluster", help="cluster columns through the learned codes")
    p.add_argument("--input", help="matrix CSV")
    p.add_argument("--k", type=int, help="number of clusters")
    p.add_argument("--kappa", type=int, help="kept affinity entries per column (default 10)")
    p.add_argument("--gamma", type=float, help="affinity ridge penalty (default 0.01)")
    p.add_argument("--kmeans-restarts", dest="kmeans_restarts", type=int,
                   help="k-means restarts (default 20)")
    p.add_argument("--truth", help="true labels CSV for the clustering error")
    _add_solver_options(p)
    _add_common(p)
    p.set_defaults(func=_cmd_cluster)

    p = sub.add_parser("rpca", help="robust PCA baseline (low-rank plus sparse)")
    p.add_argument("--input", help="matrix CSV")
    p.add_argument("--lambda", dest="lam", type=float,
                   help="sparsity weight (default 1/sqrt(n))")
    p.add_argument("--mu0", type=float, help="initial penalty (default 1.25/||X||_2)")
    p.add_argument("--mu-growth", dest="mu_growth", type=float,
                   help="penalty growth factor (default 1.5)")
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--tol", type=float)
    p.add_argument("--truth", help="clean matrix CSV for metrics")
    _add_common(p)
    p.set_defaults(func=_cmd_rpca)

    p = sub.add_parser("bench", help="compare methods on synthetic data")
    p.add_argument("mode", choices=("synthetic",))
    p.add_argument("--k", type=int, help="number of manifolds")
    p.add_argument("--rho-grid", dest="rho_grid",
                   help="comma-separated corruption levels (default 0.1,0.3,0.5)")
    p.add_argument("--seeds", type=int, help="number of trials per level (default 5)")
    p.add_argument("--noise", choices=("sparse", "column"))
    p.add_argument("--sigma-e-ratio", dest="sigma_e_ratio", type=float)
    p.add_argument("--rpca-lambda", dest="rpca_lambda", type=float)
    p.add_argument("--m", type=int)
    p.add_argument("--r", type=int)
    p.add_argument("--p", type=int)
    p.add_argument("--samples", type=int)
    _add_solver_options(p)
    _add_common(p)
    p.set_defaults(func=_cmd_bench)

    return parser


def run_command(argv):
    """Parse ``argv`` and run the selected subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE
    try:
        limit = os.environ.get("RNLMF_THREADS")
        if limit:
            from threadpoolctl import threadpool_limits
            with threadpool_limits(limits=int(limit)):
                return args.func(args)
        return args.func(args)
    except (DivergenceError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (MatrixIOError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main():
    sys.exit(run_command(sys.argv[1:]))
