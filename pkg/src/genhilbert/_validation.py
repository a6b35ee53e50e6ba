"""Input validation helpers shared by the public API.

scikit-learn's ``check_array`` rejects complex input, so coefficient arrays
get their own checker here.
"""
from __future__ import annotations

import math
import numbers

import numpy as np


def check_scalar(x, name, *, lower=None, upper=None, closed="neither"):
    """Validate a finite real scalar against optional bounds.

    ``closed`` is one of ``"neither"``, ``"left"``, ``"right"``, ``"both"``
    and says which bounds are inclusive.
    """
    if isinstance(x, bool) or not isinstance(x, numbers.Real):
        raise TypeError(f"{name} must be a real number, got {type(x).__name__}")
    x = float(x)
    if not math.isfinite(x):
        raise ValueError(f"{name} must be finite, got {x}")
    left_ok = closed in ("left", "both")
    right_ok = closed in ("right", "both")
    if lower is not None and (x < lower or (x == lower and not left_ok)):
        op = ">=" if left_ok else ">"
        raise ValueError(f"{name} must be {op} {lower}, got {x}")
    if upper is not None and (x > upper or (x == upper and not right_ok)):
        op = "<=" if right_ok else "<"
        raise ValueError(f"{name} must be {op} {upper}, got {x}")
    return x


def check_nonneg_int(n, name):
    if isinstance(n, bool) or not isinstance(n, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {type(n).__name__}")
    if n < 0:
        raise ValueError(f"{name} must be >= 0, got {n}")
    return int(n)


def check_increasing_grid(grid, name, *, lower=0.0, upper=1.0):
    """Return ``grid`` as a float array, strictly increasing in [lower, upper)."""
    g = np.asarray(grid, dtype=float).ravel()
    if g.size == 0:
        raise ValueError(f"{name} must be non-empty")
    if not np.all(np.isfinite(g)):
        raise ValueError(f"{name} contains non-finite values")
    if np.any(np.diff(g) <= 0):
        raise ValueError(f"{name} must be strictly increasing")
    if g[0] < lower or g[-1] >= upper:
        raise ValueError(f"{name} must lie in [{lower}, {upper})")
    return g


def check_coefficients(X, *, max_features=None, ensure_2d=True):
    """Validate a batch of Taylor coefficient vectors.

    Parameters
    ----------
    X : array-like of shape (n_samples, n_coeffs) or (n_coeffs,)
        Real or complex coefficients. A 1-D input is promoted to a single row
        when ``ensure_2d`` is true.
    max_features : int, optional
        Largest admissible number of coefficients per row.

    Returns
    -------
    ndarray of complex128
    """
    X = np.asarray(X)
    if X.dtype == object or not (np.issubdtype(X.dtype, np.number)):
        raise TypeError("coefficients must be numeric")
    X = X.astype(np.complex128, copy=False)
    if ensure_2d and X.ndim == 1:
        X = X[np.newaxis, :]
    if ensure_2d and X.ndim != 2:
        raise ValueError(f"expected a 2-D coefficient array, got ndim={X.ndim}")
    if X.shape[-1] == 0:
        raise ValueError("coefficient vectors must have at least one entry")
    if not np.all(np.isfinite(X)):
        raise ValueError("coefficients must be finite")
    if max_features is not None and X.shape[-1] > max_features:
        raise ValueError(
            f"coefficient vectors have {X.shape[-1]} entries, "
            f"operator truncation allows at most {max_features}"
        )
    return X


def check_disk_points(z, name="z"):
    """Return ``z`` as a complex array, requiring every point inside the open unit disk."""
    z = np.asarray(z, dtype=np.complex128)
    if not np.all(np.isfinite(z)):
        raise ValueError(f"{name} must be finite")
    if np.any(np.abs(z) >= 1.0):
        raise ValueError(f"{name} must lie in the open unit disk")
    return z
