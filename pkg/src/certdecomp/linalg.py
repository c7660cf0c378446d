"""Dense real linear algebra helpers.

Vectors are 1-d float64 arrays, matrices are 2-d float64 arrays in C
(row-major) order. Every public function rejects non-finite input.
"""

import numpy as np


class DimensionError(ValueError):
    """Operand shapes do not match."""


class NonFiniteError(ValueError):
    """A NaN or Inf entered a public operation."""


def as_vector(x, name="vector"):
    v = np.ascontiguousarray(x, dtype=float)
    if v.ndim == 0:
        v = v.reshape(1)
    if v.ndim != 1:
        raise DimensionError(f"{name} must be 1-d, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return v


def as_matrix(A, rows=None, cols=None, name="matrix"):
    """Coerce ``A`` to a finite 2-d array, optionally checking its shape.

    Empty inputs need explicit ``rows``/``cols`` so that a 0 x n matrix
    keeps its column count.
    """
    M = np.asarray(A, dtype=float)
    if M.size == 0:
        r = rows if rows is not None else (M.shape[0] if M.ndim == 2 else 0)
        c = cols if cols is not None else (M.shape[1] if M.ndim == 2 else 0)
        return np.zeros((r, c))
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-d, got shape {M.shape}")
    if rows is not None and M.shape[0] != rows:
        raise DimensionError(f"{name} has {M.shape[0]} rows, expected {rows}")
    if cols is not None and M.shape[1] != cols:
        raise DimensionError(f"{name} has {M.shape[1]} cols, expected {cols}")
    if not np.all(np.isfinite(M)):
        raise NonFiniteError(f"{name} has non-finite entries")
    return np.ascontiguousarray(M)


def matvec(A, x):
    A = as_matrix(A, name="A")
    x = as_vector(x, name="x")
    if A.shape[1] != x.shape[0]:
        raise DimensionError(f"matvec: A is {A.shape}, x has dim {x.shape[0]}")
    return A @ x


def transpose_matvec(A, y):
    A = as_matrix(A, name="A")
    y = as_vector(y, name="y")
    if A.shape[0] != y.shape[0]:
        raise DimensionError(
            f"transpose_matvec: A is {A.shape}, y has dim {y.shape[0]}")
    return A.T @ y


def norms(x):
    """Return ``{"l1": sum |x_i|, "linf": max |x_i|}`` (both 0 when empty)."""
    x = as_vector(x)
    if x.size == 0:
        return {"l1": 0.0, "linf": 0.0}
    a = np.abs(x)
    return {"l1": float(a.sum()), "linf": float(a.max())}


def l1(x):
    return norms(x)["l1"]


def linf(x):
    return norms(x)["linf"]


def max_row_l1(A):
    A = as_matrix(A)
    if A.shape[0] == 0:
        return 0.0
    return float(np.abs(A).sum(axis=1).max())
