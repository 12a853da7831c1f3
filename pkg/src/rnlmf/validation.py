"""Input validation helpers shared by the functional core and the estimators."""

import numpy as np


def check_matrix(X, name="X", allow_empty=False):
    """Coerce ``X`` to a 2-D float64 array and reject non-finite entries."""
    A = np.asarray(X, dtype=np.float64)
    if A.ndim == 1:
        A = A.reshape(1, -1)
    if A.ndim != 2:
        raise ValueError(f"{name} must be 2-D, got ndim={A.ndim}")
    if not allow_empty and A.size == 0:
        raise ValueError(f"{name} is empty")
    if not np.all(np.isfinite(A)):
        raise ValueError(f"{name} contains non-finite entries")
    return A


def check_same_rows(A, B, name_a="A", name_b="B"):
    if A.shape[0] != B.shape[0]:
        raise ValueError(
            f"{name_a} and {name_b} must have the same number of rows, "
            f"got {A.shape[0]} and {B.shape[0]}"
        )


def check_positive(value, name):
    if not value > 0:
        raise ValueError(f"{name} must be positive, got {value}")
    return float(value)


def check_nonnegative(value, name):
    if value < 0:
        raise ValueError(f"{name} must be nonnegative, got {value}")
    return float(value)
