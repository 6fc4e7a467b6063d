"""scikit-learn style estimators for yield-weighted indices.

Inputs follow the scikit-learn layout: ``X`` has one row per period and one
column per field. ``transform`` returns the index as a single column, so the
estimators drop into pipelines and ``get_params``/``set_params`` work as usual.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_periods_by_fields
from .decomposition import (
    IndexWeights,
    RiskDecomposition,
    decompose,
    optimal_weights_avg,
    optimal_weights_total,
    r2_bar,
    r2_total,
)
from .moments import degenerate_mask, panel_top_eigen


class _IndexEstimator(TransformerMixin, BaseEstimator):
    metric = "avg"

    def _validate(self, X, reset: bool) -> np.ndarray:
        X = check_periods_by_fields(X, min_periods=2 if reset else 1)
        if reset:
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but {type(self).__name__} "
                f"is expecting {self.n_features_in_} features as input"
            )
        return X

    def _fit_weights(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def fit(self, X, y=None):
        X = self._validate(X, reset=True)
        self.weights_ = self._fit_weights(X)
        self.n_degenerate_ = int(degenerate_mask(X.T).sum())
        return self

    def transform(self, X):
        check_is_fitted(self, "weights_")
        X = self._validate(X, reset=False)
        return (X @ self.weights_)[:, None]

    def score(self, X, y=None) -> float:
        """R̄² (``metric="avg"``) or R̿² (``"total"``) of the fitted index on ``X``."""
        check_is_fitted(self, "weights_")
        X = self._validate(X, reset=False)
        if X.shape[0] < 2:
            raise ValueError("scoring needs at least two periods")
        f = X @ self.weights_
        return r2_bar(X.T, f) if self.metric == "avg" else r2_total(X.T, f)

    def decompose(self, X) -> RiskDecomposition:
        """Zonal / design / total risk of the fitted index on ``X``."""
        check_is_fitted(self, "weights_")
        X = self._validate(X, reset=False)
        return decompose(X.T, IndexWeights(self.weights_, self._kind), self.metric)


class OptimalIndex(_IndexEstimator):
    """Eigenvector-weighted yield index.

    Parameters
    ----------
    metric : {"avg", "total"}
        ``"avg"`` maximizes the average per-field R² (top eigenvector of the
        correlation matrix divided by each field's sd); ``"total"`` minimizes
        the total residual sum of squares (top eigenvector of the covariance).
    denominator : {"T-1", "T"}
        Variance denominator; only rescales the weights.

    Attributes
    ----------
    weights_ : ndarray of shape (n_fields,)
    explained_share_ : float
        λ₁/Σλ, the R̄² (or R̿²) the index attains in-sample.
    eigenvalues_ : ndarray
    """

    def __init__(self, metric: str = "avg", denominator: str = "T-1"):
        self.metric = metric
        self.denominator = denominator

    @property
    def _kind(self):
        return "optimal_avg" if self.metric == "avg" else "optimal_total"

    def _fit_weights(self, X):
        if self.metric not in ("avg", "total"):
            raise ValueError(f"metric must be 'avg' or 'total', got {self.metric!r}")
        eig = panel_top_eigen(X.T, "corr" if self.metric == "avg" else "cov", self.denominator)
        self.explained_share_ = eig.top_share
        self.eigenvalues_ = np.array(eig.eigenvalues)
        fn = optimal_weights_avg if self.metric == "avg" else optimal_weights_total
        return np.array(fn(X.T, self.denominator).weights)


class ZoneMeanIndex(_IndexEstimator):
    """Unweighted zone average (area-yield index); weights 1/N."""

    _kind = "zone_mean"

    def __init__(self, metric: str = "avg"):
        self.metric = metric

    def _fit_weights(self, X):
        return np.full(X.shape[1], 1.0 / X.shape[1])


class SubsampleMeanIndex(_IndexEstimator):
    """Average of ``size`` randomly chosen fields; weights 1/size on the chosen ones."""

    _kind = "subsample_mean"

    def __init__(self, size: int = 10, random_state: int | None = None, metric: str = "avg"):
        self.size = size
        self.random_state = random_state
        self.metric = metric

    def _fit_weights(self, X):
        n = X.shape[1]
        if not 1 <= self.size <= n:
            raise ValueError(f"size must be in [1, {n}], got {self.size}")
        rng = np.random.default_rng(self.random_state)
        self.members_ = np.sort(rng.choice(n, size=self.size, replace=False))
        w = np.zeros(n)
        w[self.members_] = 1.0 / self.size
        return w
