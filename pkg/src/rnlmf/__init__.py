"""Robust non-linear matrix factorization: denoising, dictionaries, clustering."""

from .clustering import (affinity_from_codes, clustering_error, sparsify_normalize,
                         spectral_clustering, spectral_embedding)
from .datagen import (NoiseSpec, SynthSpec, apply_noise, feature_count,
                      inject_block_occlusion, inject_columnwise_gaussian,
                      inject_salt_pepper, inject_sparse_gaussian, mae,
                      poly_features, rmse, sample_manifold_union)
from .estimators import RNLMF, RNLMFClustering, RobustPCA
from .kernels import (KernelSpec, SeriesCheckReport, feature_nuclear_norm,
                      kernel_matrix, rbf_kernel, series_truncation_check,
                      sigma_heuristic)
from .matrix_io import (MatrixIOError, read_config_file, read_labels, read_matrix,
                        write_labels, write_matrix, write_metrics)
from .prox import column_soft_threshold, ridge_factor, ridge_solve, soft_threshold, svt
from .rpca import RpcaConfig, RpcaResult, rpca_admm
from .solver import (DivergenceError, FitTrace, RnlmfConfig, RnlmfModel,
                     denoise_with_dictionary, default_config, fit_rnlmf, grad_D,
                     grad_E, objective, out_of_sample, update_C, update_D, update_E)

__version__ = "0.1.0"

__all__ = [
    "RNLMF", "RNLMFClustering", "RobustPCA",
    "KernelSpec", "SeriesCheckReport", "kernel_matrix", "rbf_kernel",
    "sigma_heuristic", "feature_nuclear_norm", "series_truncation_check",
    "soft_threshold", "svt", "column_soft_threshold", "ridge_solve", "ridge_factor",
    "RnlmfConfig", "RnlmfModel", "FitTrace", "DivergenceError",
    "fit_rnlmf", "out_of_sample", "denoise_with_dictionary", "default_config",
    "objective", "grad_D", "grad_E", "update_C", "update_D", "update_E",
    "affinity_from_codes", "sparsify_normalize", "spectral_clustering",
    "spectral_embedding", "clustering_error",
    "SynthSpec", "NoiseSpec", "sample_manifold_union", "poly_features",
    "feature_count", "apply_noise", "inject_sparse_gaussian",
    "inject_columnwise_gaussian", "inject_salt_pepper", "inject_block_occlusion",
    "rmse", "mae",
    "RpcaConfig", "RpcaResult", "rpca_admm",
    "read_matrix", "write_matrix", "read_labels", "write_labels",
    "write_metrics", "read_config_file", "MatrixIOError",
    "__version__",
]
