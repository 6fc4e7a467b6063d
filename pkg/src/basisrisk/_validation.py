"""Input checks shared by the numerical modules and the estimators."""
from __future__ import annotations

import numpy as np
from sklearn.utils.validation import check_array


def check_symmetric(matrix, rtol: float = 1e-10, block: int = 1024) -> np.ndarray:
    """Return ``matrix`` as a float array, or raise if it is not symmetric.

    The check runs over row blocks so large matrices need no N x N temporaries.
    The matrix is returned as is: the solvers read a single triangle or only
    multiply by it, so rounding-level asymmetry does not matter.
    """
    m = check_array(matrix, dtype=float, ensure_2d=True, ensure_all_finite=True)
    n = m.shape[0]
    if n != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    scale = max(float(m.max()), -float(m.min()), 1e-300)
    for start in range(0, n, block):
        stop = min(start + block, n)
        if np.abs(m[start:stop] - m[:, start:stop].T).max() > rtol * scale:
            raise ValueError("matrix is not symmetric")
    return m


def check_series(values, length: int | None = None, name: str = "index") -> np.ndarray:
    v = np.asarray(values, dtype=float)
    if v.ndim == 2 and 1 in v.shape:
        v = v.ravel()
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if length is not None and len(v) != length:
        raise ValueError(f"{name} has length {len(v)}, expected {length}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite values")
    return v


def check_periods_by_fields(X, min_periods: int = 2) -> np.ndarray:
    """Validate an estimator input: rows are periods, columns are fields."""
    return check_array(X, dtype=float, ensure_min_samples=min_periods, ensure_all_finite=True)
