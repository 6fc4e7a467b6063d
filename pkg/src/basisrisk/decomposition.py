"""Basis-risk decomposition into zonal and design risk.

Basis risk of a field against an index f is 1 - R²ᵢ(f), the share of the
field's yield variance the index leaves unexplained. Zone-level risk averages
it over fields, either unweighted (R̄²) or weighted by each field's total sum
of squares (R̿²). The best index for R̄² weights fields by the leading
eigenvector of the correlation matrix, rescaled by 1/σᵢ; the best index for
R̿² is the first principal component of the covariance matrix. Their
attained values are the leading-eigenvalue shares, so

    zonal risk  = 1 - λ₁/Σλ          (what no index can remove)
    design risk = λ₁/Σλ - R̄²(f)      (what a better index could remove)
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import check_series
from .moments import (
    DegenerateError,
    MomentSummary,
    _ddof,
    centered,
    degenerate_mask,
    panel_top_eigen,
    top_eigen,
)
from .panel import YieldPanel

INDEX_KINDS = ("zone_mean", "subsample_mean", "optimal_avg", "optimal_total", "custom")
METRICS = ("avg", "total")


class DegenerateIndexError(DegenerateError):
    pass


@dataclass(frozen=True)
class FieldRegression:
    field_id: str
    alpha: float
    beta: float
    r2: float
    sst: float
    ssr: float
    resid_sd: float


@dataclass(frozen=True, eq=False)
class IndexWeights:
    """Weight vector w defining the output-based index f = Yw."""

    weights: np.ndarray
    kind: str = "custom"

    def __post_init__(self):
        w = np.array(self.weights, dtype=float, copy=True).ravel()
        if not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite")
        if self.kind not in INDEX_KINDS:
            raise ValueError(f"kind must be one of {INDEX_KINDS}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def sum_to_one(self) -> np.ndarray:
        """Weights rescaled to sum to one; for display only (NaN if they sum to 0)."""
        s = self.weights.sum()
        if s == 0:
            return np.full_like(self.weights, np.nan)
        return self.weights / s

    def index(self, panel: YieldPanel) -> np.ndarray:
        if len(self.weights) != panel.n:
            raise ValueError(f"{len(self.weights)} weights for {panel.n} fields")
        return panel.values.T @ self.weights


@dataclass(frozen=True, eq=False)
class RiskDecomposition:
    """Zonal / design / total split for one index in one zone.

    ``r2_bar`` and ``r2_bar_opt`` hold R̄² (``metric="avg"``) or R̿²
    (``metric="total"``). ``total_risk`` is defined as the sum of the two
    components so the identity holds bit-for-bit; it equals ``1 - r2_bar`` up
    to rounding.
    """

    index_kind: str
    metric: str
    r2_bar: float
    r2_bar_opt: float
    zonal_risk: float
    design_risk: float
    per_field_r2: np.ndarray
    r2_total: float
    n_degenerate: int

    @property
    def total_risk(self) -> float:
        return self.zonal_risk + self.design_risk


def _series(index, t: int) -> np.ndarray:
    values = getattr(index, "values", index)
    return check_series(values, t)


def _index_values(values: np.ndarray, index) -> tuple[np.ndarray, str]:
    if isinstance(index, IndexWeights):
        if len(index.weights) != values.shape[0]:
            raise ValueError(f"{len(index.weights)} weights for {values.shape[0]} fields")
        return values.T @ index.weights, index.kind
    return _series(index, values.shape[1]), getattr(index, "kind", "custom")


def _check_index(f: np.ndarray) -> np.ndarray:
    if np.ptp(f) == 0:
        raise DegenerateIndexError("index is constant over time")
    fc = f - f.mean()
    return fc


def field_r2(values: np.ndarray, index) -> np.ndarray:
    """R²ᵢ of each row of ``values`` against ``index``; NaN for constant rows."""
    values = np.asarray(values, dtype=float)
    fc = _check_index(_series(index, values.shape[1]))
    degen = degenerate_mask(values)
    xc = centered(values)
    sst = np.einsum("ij,ij->i", xc, xc)
    cov = xc @ fc
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = cov * cov / (sst * (fc @ fc))
    r2 = np.clip(r2, 0.0, 1.0)
    r2[degen] = np.nan
    return r2


def r2_bar(values, index) -> float:
    """Unweighted mean R² over non-degenerate fields."""
    values = getattr(values, "values", values)
    r2 = field_r2(values, index)
    if np.all(np.isnan(r2)):
        raise DegenerateError("all fields have zero variance")
    return float(np.nanmean(r2))


def r2_total(values, index) -> float:
    """Variance-weighted mean R², i.e. 1 - ΣSSRᵢ/ΣSSTᵢ."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    r2 = field_r2(values, index)
    xc = centered(values)
    sst = np.einsum("ij,ij->i", xc, xc)
    ok = ~np.isnan(r2)
    if not ok.any():
        raise DegenerateError("all fields have zero variance")
    return float(sst[ok] @ r2[ok] / sst[ok].sum())


def total_ssr(values, index) -> float:
    """Σᵢ SSRᵢ from regressing every field on ``index``."""
    values = np.asarray(getattr(values, "values", values), dtype=float)
    r2 = np.nan_to_num(field_r2(values, index), nan=0.0)
    xc = centered(values)
    sst = np.einsum("ij,ij->i", xc, xc)
    return float(sst @ (1.0 - r2))


def _ols_arrays(values: np.ndarray, f: np.ndarray):
    t = values.shape[1]
    fc = _check_index(f)
    xc = centered(values)
    sst = np.einsum("ij,ij->i", xc, xc)
    beta = xc @ fc / (fc @ fc)
    alpha = values.mean(axis=1) - beta * f.mean()
    resid = values - alpha[:, None] - beta[:, None] * f[None, :]
    ssr = np.einsum("ij,ij->i", resid, resid)
    degen = sst == 0
    with np.errstate(invalid="ignore", divide="ignore"):
        r2 = np.where(degen, np.nan, 1.0 - ssr / np.where(degen, 1.0, sst))
    ssr = np.minimum(ssr, sst)
    resid_sd = np.sqrt(ssr / (t - 2)) if t > 2 else np.zeros_like(ssr)
    return alpha, beta, r2, sst, ssr, resid_sd


def regress_fields(panel: YieldPanel, index) -> list[FieldRegression]:
    """OLS of each field's yields on the index: yᵢₜ = αᵢ + βᵢ fₜ + εᵢₜ.

    ``resid_sd`` uses T - 2 degrees of freedom (0 when T = 2).
    """
    f = _series(index, panel.t)
    cols = _ols_arrays(panel.values, f)
    return [
        FieldRegression(fid, *(float(c[i]) for c in cols))
        for i, fid in enumerate(panel.field_ids)
    ]


def beta_vector(moments: MomentSummary) -> np.ndarray:
    """Slopes of every field on the zone mean, N Σ1 / 1'Σ1."""
    s1 = moments.sigma.sum(axis=1)
    denom = s1.sum()
    if not denom > 0:
        raise DegenerateError("zone mean has zero variance (1'Σ1 <= 0)")
    return moments.n * s1 / denom


def _sigma_w(moments: MomentSummary, weights: IndexWeights):
    w = weights.weights
    if len(w) != moments.n:
        raise ValueError(f"{len(w)} weights for {moments.n} fields")
    sw = moments.sigma @ w
    wsw = float(w @ sw)
    if not wsw > 0:
        raise DegenerateIndexError("index Yw has zero variance (w'Σw <= 0)")
    return sw, wsw


def r2_matrix(moments: MomentSummary, weights: IndexWeights) -> np.ndarray:
    """Full N x N matrix D^-1/2 Σw (w'Σw)^-1 w'Σ D^-1/2.

    Only the diagonal (the per-field R²) is meaningful; the off-diagonal
    entries have no direct interpretation. Rows and columns of degenerate
    fields are NaN. Prefer :func:`r2_diag` for large N.
    """
    sw, wsw = _sigma_w(moments, weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = sw / np.sqrt(moments.var_diag)
    a[moments.degenerate] = np.nan
    return np.outer(a, a) / wsw


def r2_diag(moments: MomentSummary, weights: IndexWeights) -> np.ndarray:
    """Diagonal of :func:`r2_matrix` without forming the N x N matrix."""
    sw, wsw = _sigma_w(moments, weights)
    with np.errstate(divide="ignore", invalid="ignore"):
        d = sw * sw / (moments.var_diag * wsw)
    d[moments.degenerate] = np.nan
    return d


def _field_sd(values: np.ndarray, denominator: str) -> np.ndarray:
    xc = centered(values)
    return np.sqrt(np.einsum("ij,ij->i", xc, xc) / _ddof(denominator, values.shape[1]))


def optimal_weights_avg(moments: MomentSummary | YieldPanel | np.ndarray, denominator: str = "T-1") -> IndexWeights:
    """Weights w* maximizing R̄²(Yw): the top eigenvector of C divided by σᵢ.

    Accepts a :class:`MomentSummary` or, for large N, the panel (or its
    (N, T) values) itself; the eigenvector then comes from the T x T Gram
    matrix. Degenerate fields get
    weight 0.
    """
    if not isinstance(moments, MomentSummary):
        values = np.asarray(getattr(moments, "values", moments), dtype=float)
        eig = panel_top_eigen(values, "corr", denominator)
        sd = _field_sd(values, denominator)
        degen = degenerate_mask(values)
    else:
        if moments.n_effective == 0:
            raise DegenerateError("all fields have zero variance")
        eig = top_eigen(moments.corr)
        sd = np.sqrt(moments.var_diag)
        degen = moments.degenerate
    w = np.zeros(len(sd))
    ok = ~degen
    w[ok] = eig.first_eigenvector[ok] / sd[ok]
    return IndexWeights(w, "optimal_avg")


def optimal_weights_total(moments: MomentSummary | YieldPanel | np.ndarray, denominator: str = "T-1") -> IndexWeights:
    """Weights w** minimizing ΣSSRᵢ: the top eigenvector of Σ."""
    if not isinstance(moments, MomentSummary):
        eig = panel_top_eigen(getattr(moments, "values", moments), "cov", denominator)
    else:
        if moments.n_effective == 0:
            raise DegenerateError("all fields have zero variance")
        eig = top_eigen(moments.sigma)
    return IndexWeights(np.array(eig.first_eigenvector), "optimal_total")


def optimal_share(panel: YieldPanel | np.ndarray, metric: str = "avg") -> float:
    """Best attainable R̄² (``avg``) or R̿² (``total``) for the zone."""
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    return panel_top_eigen(panel, "corr" if metric == "avg" else "cov").top_share


def decompose(panel: YieldPanel | np.ndarray, index, metric: str = "avg") -> RiskDecomposition:
    """Split the basis risk of ``index`` over ``panel`` into zonal and design risk.

    Parameters
    ----------
    panel : YieldPanel for one zone, or its (N, T) values.
    index : IndexWeights (f = Yw), an IndexSeries, or a length-T array.
    metric : ``"avg"`` scores with R̄² against the correlation-eigenvalue
        bound; ``"total"`` with R̿² against the covariance-eigenvalue bound.
    """
    if metric not in METRICS:
        raise ValueError(f"metric must be one of {METRICS}")
    values = np.asarray(getattr(panel, "values", panel), dtype=float)
    f, kind = _index_values(values, index)
    r2 = field_r2(values, f)
    n_degen = int(np.isnan(r2).sum())
    if n_degen == len(values):
        raise DegenerateError("all fields have zero variance")
    xc = centered(values)
    sst = np.einsum("ij,ij->i", xc, xc)
    ok = ~np.isnan(r2)
    avg = float(np.mean(r2[ok]))
    tot = float(sst[ok] @ r2[ok] / sst[ok].sum())
    value = avg if metric == "avg" else tot
    opt = optimal_share(values, metric)
    r2.setflags(write=False)
    return RiskDecomposition(
        index_kind=kind,
        metric=metric,
        r2_bar=value,
        r2_bar_opt=opt,
        zonal_risk=1.0 - opt,
        design_risk=opt - value,
        per_field_r2=r2,
        r2_total=tot,
        n_degenerate=n_degen,
    )
