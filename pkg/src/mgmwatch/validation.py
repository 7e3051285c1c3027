"""Input validation helpers for model parameters and data streams."""
from __future__ import annotations

import numpy as np

from .errors import DimensionMismatchError, NotSymmetricError

__all__ = [
    "as_float_matrix",
    "as_float_vector",
    "symmetrized",
    "check_binary",
    "check_finite",
    "split_stream",
]


def as_float_matrix(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 2:
        raise DimensionMismatchError(f"{name} must be a 2-d array, got ndim={a.ndim}")
    return a


def as_float_vector(x, name: str) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    if a.ndim != 1:
        raise DimensionMismatchError(f"{name} must be a 1-d array, got ndim={a.ndim}")
    return a


def symmetrized(a: np.ndarray, name: str, tol: float) -> np.ndarray:
    """Return the symmetric average of ``a``, rejecting asymmetry beyond ``tol``.

    Small asymmetry (serialization round-off) is averaged away so that
    downstream code can rely on exact symmetry; anything larger is treated
    as a corrupt parameter matrix.
    """
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    if a.size:
        worst = float(np.max(np.abs(a - a.T)))
        if worst > tol:
            raise NotSymmetricError(
                f"{name} is not symmetric: max |a - a'| = {worst:g} exceeds {tol:g}"
            )
    return (a + a.T) / 2.0


def check_binary(a: np.ndarray, name: str) -> None:
    if a.size and not np.all((a == 0.0) | (a == 1.0)):
        raise ValueError(f"{name} must contain only 0 and 1")


def check_finite(a: np.ndarray, name: str) -> None:
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} must be finite")


def split_stream(X, n_cat: int, n_quant: int) -> tuple[np.ndarray, np.ndarray]:
    """Split an (n, n_cat + n_quant) array into validated binary and continuous blocks.

    Column convention everywhere in this package: binary variables first,
    continuous variables after them.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatchError(f"expected a 2-d array, got ndim={X.ndim}")
    if X.shape[1] != n_cat + n_quant:
        raise DimensionMismatchError(
            f"expected {n_cat + n_quant} columns ({n_cat} binary + {n_quant} continuous), "
            f"got {X.shape[1]}"
        )
    x_cat = X[:, :n_cat]
    x_quant = X[:, n_cat:]
    check_binary(x_cat, "binary columns")
    check_finite(x_quant, "continuous columns")
    return x_cat, x_quant
