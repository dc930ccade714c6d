"""Input validation helpers shared by the estimators."""

from __future__ import annotations

import numpy as np

__all__ = ["check_feature_matrix", "check_class_labels"]


def check_feature_matrix(X, dim: int | None = None) -> np.ndarray:
    """Coerce X to a finite float64 2-D array, optionally of fixed width."""
    arr = np.asarray(X, dtype=np.float64)
    if arr.ndim != 2:
        raise ValueError(f"expected a 2-D feature matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("feature matrix contains NaN or Inf")
    if dim is not None and arr.shape[1] != dim:
        raise ValueError(f"expected {dim} features, got {arr.shape[1]}")
    return arr


def check_class_labels(y, n_rows: int, num_classes: int | None = None) -> np.ndarray:
    """Coerce y to nonnegative int64 labels aligned with the feature rows."""
    arr = np.asarray(y)
    if arr.ndim != 1 or arr.shape[0] != n_rows:
        raise ValueError(f"expected {n_rows} labels, got shape {arr.shape}")
    if arr.size and not np.issubdtype(arr.dtype, np.integer):
        raise ValueError("labels must be integers")
    arr = arr.astype(np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError("labels must be nonnegative")
    if num_classes is not None and arr.size and arr.max() >= num_classes:
        raise ValueError(f"label {arr.max()} out of range for {num_classes} classes")
    return arr
