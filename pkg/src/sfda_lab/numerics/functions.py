"""Scalar functions shared by every loss and split computation.

Every function accepts a single vector or a batch of row vectors (last axis is
the class/feature axis) and works in float64.
"""

import numpy as np
import numpy.typing as npt

from ..errors import DegenerateInputError, NumericError, UsageError

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

LOG_EPS = 1e-12
NORM_EPS = 1e-12
PROB_TOL = 1e-9


def as_float_array(values: npt.ArrayLike, name: str = "input") -> FloatArray:
    """Convert to a float64 array, rejecting empty or non-finite input."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.size == 0 or arr.shape[-1] == 0:
        raise UsageError(f"{name} must be non-empty")
    if not np.all(np.isfinite(arr)):
        raise NumericError(f"{name} contains NaN or Inf")
    return arr


def softmax(logits: npt.ArrayLike) -> FloatArray:
    """Numerically stable softmax along the last axis."""
    z = as_float_array(logits, "logits")
    shifted = z - np.max(z, axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / np.sum(exp, axis=-1, keepdims=True)


def check_probabilities(p: npt.ArrayLike, name: str = "probabilities") -> FloatArray:
    """Validate that ``p`` holds probability vectors along the last axis."""
    try:
        arr = as_float_array(p, name)
    except NumericError as e:
        raise UsageError(str(e)) from e
    if np.any(arr < -PROB_TOL) or np.any(arr > 1 + PROB_TOL):
        raise UsageError(f"{name} has entries outside [0, 1]")
    if np.any(np.abs(arr.sum(axis=-1) - 1.0) > PROB_TOL):
        raise UsageError(f"{name} does not sum to 1")
    return arr


def _xlogx(p: FloatArray) -> FloatArray:
    # 0 * log 0 := 0
    safe = np.where(p > 0, p, 1.0)
    return np.where(p > 0, p * np.log(safe), 0.0)


def entropy(p: npt.ArrayLike) -> FloatArray | float:
    """Shannon entropy in nats, ``-sum p log p``.

    Returns a float for a single vector and an array for a batch.
    """
    arr = check_probabilities(p)
    k = arr.shape[-1]
    h = np.clip(-np.sum(_xlogx(arr), axis=-1), 0.0, np.log(k))
    return float(h) if arr.ndim == 1 else h


def cross_entropy(pred: npt.ArrayLike, target: npt.ArrayLike) -> FloatArray | float:
    """``-sum target log pred`` with ``pred`` clamped below by 1e-12."""
    pred_arr = np.asarray(pred, dtype=np.float64)
    target_arr = np.asarray(target, dtype=np.float64)
    if pred_arr.shape != target_arr.shape:
        raise UsageError(
            f"shape mismatch: pred {pred_arr.shape} vs target {target_arr.shape}"
        )
    pred_arr = as_float_array(pred_arr, "pred")
    target_arr = as_float_array(target_arr, "target")
    ce = -np.sum(target_arr * np.log(np.maximum(pred_arr, LOG_EPS)), axis=-1)
    return float(ce) if pred_arr.ndim == 1 else ce


def cosine_distance(u: npt.ArrayLike, v: npt.ArrayLike) -> float:
    """``1 - cos(u, v)`` in [0, 2].

    Raises:
        UsageError: If the vectors differ in dimension.
        DegenerateInputError: If either vector has norm at most 1e-12.
    """
    a = as_float_array(u, "u")
    b = as_float_array(v, "v")
    if a.shape != b.shape or a.ndim != 1:
        raise UsageError(f"dimension mismatch: {a.shape} vs {b.shape}")
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na <= NORM_EPS or nb <= NORM_EPS:
        raise DegenerateInputError("cosine distance of a near-zero vector")
    return float(np.clip(1.0 - np.dot(a, b) / (na * nb), 0.0, 2.0))


def cosine_distance_matrix(rows: FloatArray, centers: FloatArray) -> FloatArray:
    """Pairwise cosine distances between ``rows`` (n x d) and ``centers`` (k x d).

    Entries involving a near-zero vector are ``inf``.
    """
    row_norm = np.linalg.norm(rows, axis=1)
    center_norm = np.linalg.norm(centers, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        sim = (rows @ centers.T) / np.outer(row_norm, center_norm)
    dist = np.clip(1.0 - sim, 0.0, 2.0)
    bad = (row_norm <= NORM_EPS)[:, None] | (center_norm <= NORM_EPS)[None, :]
    return np.where(bad, np.inf, dist)


def one_hot(labels: npt.ArrayLike, num_classes: int) -> FloatArray:
    """Encode integer labels as float one-hot rows."""
    idx = np.asarray(labels, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= num_classes):
        raise UsageError(f"labels must lie in [0, {num_classes})")
    out = np.zeros((idx.shape[0], num_classes), dtype=np.float64)
    out[np.arange(idx.shape[0]), idx] = 1.0
    return out
