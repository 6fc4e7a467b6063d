"""Second moments of a yield panel and the leading eigenpair of Σ or C.

For panels with many more fields than periods the leading eigenpair is taken
from the T x T Gram matrix of the scaled, demeaned data instead of the N x N
matrix: both share their nonzero eigenvalues and their trace.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse.linalg import eigsh

from ._validation import check_symmetric
from .panel import YieldPanel

DENOMINATORS = ("T-1", "T")

# above this size the direct path only extracts the top eigenpair (Lanczos)
DENSE_FULL_SPECTRUM_MAX = 2000


class InsufficientDataError(ValueError):
    pass


class DegenerateError(ValueError):
    """Raised when every field (or the index) has zero variance."""


@dataclass(frozen=True, eq=False)
class MomentSummary:
    """Covariance Σ, variances, and correlation C of a panel.

    Fields with constant yields are flagged in ``degenerate``; their row and
    column of ``corr`` are zero, including the diagonal.
    """

    sigma: np.ndarray
    var_diag: np.ndarray
    corr: np.ndarray
    n: int
    t: int
    degenerate: np.ndarray
    denominator: str = "T-1"

    @property
    def n_degenerate(self) -> int:
        return int(self.degenerate.sum())

    @property
    def n_effective(self) -> int:
        return self.n - self.n_degenerate


@dataclass(frozen=True, eq=False)
class EigenSummary:
    eigenvalues: np.ndarray
    first_eigenvector: np.ndarray
    trace: float
    top_share: float
    method: str = "direct"


def _ddof(denominator: str, t: int) -> float:
    if denominator not in DENOMINATORS:
        raise ValueError(f"denominator must be one of {DENOMINATORS}, got {denominator!r}")
    return float(t - 1 if denominator == "T-1" else t)


def degenerate_mask(values: np.ndarray) -> np.ndarray:
    """True for rows with exactly constant values."""
    return np.ptp(values, axis=1) == 0


def centered(values: np.ndarray) -> np.ndarray:
    return values - values.mean(axis=1, keepdims=True)


def _values(panel_or_values) -> np.ndarray:
    if isinstance(panel_or_values, YieldPanel):
        return panel_or_values.values
    v = np.asarray(panel_or_values, dtype=float)
    if v.ndim != 2:
        raise ValueError("expected a fields x periods matrix")
    return v


def compute_moments(panel: YieldPanel | np.ndarray, denominator: str = "T-1") -> MomentSummary:
    """Sample covariance and correlation of the panel's fields.

    Parameters
    ----------
    panel : YieldPanel or (N, T) array
    denominator : ``"T-1"`` (default, unbiased) or ``"T"``. Correlations and
        every R² quantity are invariant to this choice.
    """
    y = _values(panel)
    n, t = y.shape
    if t < 2:
        raise InsufficientDataError(f"need at least 2 periods, got {t}")
    den = _ddof(denominator, t)
    degen = degenerate_mask(y)
    xc = centered(y)
    xc[degen] = 0.0
    sigma = xc @ xc.T / den
    sigma = (sigma + sigma.T) / 2.0
    var = np.diag(sigma).copy()
    inv_sd = np.zeros(n)
    inv_sd[~degen] = 1.0 / np.sqrt(var[~degen])
    corr = sigma * np.outer(inv_sd, inv_sd)
    ok = ~degen
    corr[ok, ok] = 1.0
    for a in (sigma, var, corr, degen):
        a.setflags(write=False)
    return MomentSummary(sigma, var, corr, n, t, degen, denominator)


def normalize_sign(v: np.ndarray) -> np.ndarray:
    """Flip ``v`` so its entries sum to a nonnegative value.

    If the sum is zero (to rounding), the first nonzero entry is made positive.
    """
    v = np.asarray(v, dtype=float)
    s = v.sum()
    scale = np.abs(v).sum()
    if abs(s) > 1e-12 * max(scale, 1e-300):
        return v if s > 0 else -v
    nz = np.flatnonzero(np.abs(v) > 1e-14 * max(scale, 1e-300))
    if len(nz) and v[nz[0]] < 0:
        return -v
    return v


def _clip_spectrum(vals: np.ndarray, trace: float) -> np.ndarray:
    vals = np.sort(vals)[::-1]
    tol = 1e-9 * max(abs(trace), 1e-300)
    if vals[-1] < -tol:
        raise ValueError(f"matrix is not positive semi-definite (eigenvalue {vals[-1]:.3g})")
    return np.clip(vals, 0.0, None)


def _summary(vals, v1, trace, method) -> EigenSummary:
    if not trace > 0:
        raise DegenerateError("zero trace: all fields have zero variance")
    v1 = normalize_sign(v1 / np.linalg.norm(v1))
    vals = np.asarray(vals, dtype=float)
    for a in (vals, v1):
        a.setflags(write=False)
    return EigenSummary(vals, v1, float(trace), float(vals[0] / trace), method)


def top_eigen(
    matrix: np.ndarray | YieldPanel | MomentSummary,
    kind: str = "corr",
    denominator: str = "T-1",
) -> EigenSummary:
    """Leading eigenvalue share and eigenvector of a symmetric PSD matrix.

    ``matrix`` may be an explicit N x N matrix, or a :class:`YieldPanel` /
    ``MomentSummary`` in which case ``kind`` selects the correlation
    (``"corr"``) or covariance (``"cov"``) matrix. The panel form never builds
    the N x N matrix when N > T.

    For panels the returned eigenvector has one entry per field; degenerate
    (zero-variance) fields get 0. ``eigenvalues`` lists the nonzero part of
    the spectrum (at most ``min(N, T)`` values, or only λ₁ when a large
    explicit matrix is solved by Lanczos).
    """
    if isinstance(matrix, YieldPanel):
        return panel_top_eigen(matrix, kind, denominator)
    if isinstance(matrix, MomentSummary):
        m = matrix.corr if kind == "corr" else matrix.sigma
        return top_eigen(m)
    m = check_symmetric(matrix)
    n = m.shape[0]
    trace = float(np.trace(m))
    if n > DENSE_FULL_SPECTRUM_MAX:
        v0 = np.full(n, 1.0 / np.sqrt(n))
        val, vec = eigsh(m, k=1, which="LA", v0=v0, tol=0)
        return _summary(np.array([max(val[0], 0.0)]), vec[:, 0], trace, "lanczos")
    vals, vecs = np.linalg.eigh(m)
    v1 = vecs[:, -1]
    return _summary(_clip_spectrum(vals, trace), v1, trace, "direct")


def scaled_rows(values: np.ndarray, kind: str, denominator: str = "T-1"):
    """Rows X with X Xᵀ equal to C (``corr``) or Σ (``cov``) over non-degenerate fields.

    Returns ``(X, keep)`` where ``keep`` is the boolean mask of kept fields.
    """
    if kind not in ("corr", "cov"):
        raise ValueError("kind must be 'corr' or 'cov'")
    y = _values(values)
    t = y.shape[1]
    if t < 2:
        raise InsufficientDataError(f"need at least 2 periods, got {t}")
    keep = ~degenerate_mask(y)
    xc = centered(y[keep])
    if kind == "corr":
        x = xc / np.sqrt(np.einsum("ij,ij->i", xc, xc))[:, None]
    else:
        x = xc / np.sqrt(_ddof(denominator, t))
    return x, keep


def panel_top_eigen(
    values: YieldPanel | np.ndarray, kind: str = "corr", denominator: str = "T-1"
) -> EigenSummary:
    """Leading eigenpair of C or Σ straight from (N, T) data.

    Uses the T x T Gram matrix when N > T, the N x N matrix otherwise.
    """
    x, keep = scaled_rows(values, kind, denominator)
    n_all = len(keep)
    if x.shape[0] == 0:
        raise DegenerateError("all fields have zero variance")
    n, t = x.shape
    v_full = np.zeros(n_all)
    if n > t:
        gram = x.T @ x
        gram = (gram + gram.T) / 2.0
        trace = float(np.trace(gram))
        vals, u = np.linalg.eigh(gram)
        xu = x @ u[:, -1]
        v_full[keep] = xu
        return _summary(_clip_spectrum(vals, trace)[: min(n, t)], v_full, trace, "gram")
    m = x @ x.T
    m = (m + m.T) / 2.0
    trace = float(np.trace(m))
    vals, vecs = np.linalg.eigh(m)
    v_full[keep] = vecs[:, -1]
    return _summary(_clip_spectrum(vals, trace), v_full, trace, "direct")


def eigen_share(panel: YieldPanel | np.ndarray, kind: str = "corr") -> float:
    """λ₁ / Σλᵢ of the panel's correlation (or covariance) matrix.

    This is the best attainable average R² (``corr``) or total R² (``cov``)
    of any index for the zone.
    """
    return panel_top_eigen(panel, kind).top_share
