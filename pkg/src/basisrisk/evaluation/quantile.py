"""Quantile-regression pseudo-R² of an index against each field.

For one regressor plus intercept the check-loss minimum is attained by a line
through two observations, so for short series every such line is tried.
Longer series go through a linear program (HiGHS).
"""
from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy.optimize import linprog

from .._validation import check_series
from ..decomposition import DegenerateIndexError
from ..panel import YieldPanel

ENUMERATION_MAX_T = 12


class QuantileSolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class QuantileFit:
    tau: float
    v_model: float
    v_null: float
    intercept: float
    slope: float

    @property
    def pseudo_r2(self) -> float:
        if self.v_null == 0:
            return float("nan")
        return 1.0 - self.v_model / self.v_null


@dataclass(frozen=True, eq=False)
class QuantileR2:
    fits: tuple[QuantileFit, ...]
    r2q_bar: float
    pooled: float
    n_degenerate: int

    @property
    def pseudo_r2(self) -> np.ndarray:
        return np.array([f.pseudo_r2 for f in self.fits])


def check_loss(resid: np.ndarray, tau: float) -> np.ndarray:
    """ρ_τ(u) = u (τ - 1{u < 0}), summed over the last axis."""
    resid = np.asarray(resid, dtype=float)
    return np.sum(resid * (tau - (resid < 0)), axis=-1)


def _null_fit(y: np.ndarray, tau: float) -> tuple[float, float]:
    # the optimal constant is an order statistic
    losses = check_loss(y[None, :] - y[:, None], tau)
    k = int(np.argmin(losses))
    return float(losses[k]), float(y[k])


def _enumerate(y: np.ndarray, f: np.ndarray, tau: float) -> tuple[float, float, float]:
    pairs = np.array([(i, j) for i, j in combinations(range(len(y)), 2) if f[i] != f[j]])
    i, j = pairs[:, 0], pairs[:, 1]
    slope = (y[j] - y[i]) / (f[j] - f[i])
    icpt = y[i] - slope * f[i]
    resid = y[None, :] - icpt[:, None] - slope[:, None] * f[None, :]
    losses = check_loss(resid, tau)
    k = int(np.argmin(losses))
    return float(losses[k]), float(icpt[k]), float(slope[k])


def _linprog(y: np.ndarray, f: np.ndarray, tau: float) -> tuple[float, float, float]:
    t = len(y)
    # variables: a+, a-, b+, b-, u (t), v (t); a + b f + u - v = y
    c = np.concatenate([[0.0, 0.0, 0.0, 0.0], np.full(t, tau), np.full(t, 1.0 - tau)])
    a_eq = np.hstack([np.ones((t, 1)), -np.ones((t, 1)), f[:, None], -f[:, None], np.eye(t), -np.eye(t)])
    res = linprog(c, A_eq=a_eq, b_eq=y, bounds=(0, None), method="highs")
    if not res.success:
        raise QuantileSolverError(res.message)
    a = res.x[0] - res.x[1]
    b = res.x[2] - res.x[3]
    return float(check_loss(y - a - b * f, tau)), float(a), float(b)


def quantile_fit(y, index, tau: float = 0.3, method: str = "auto") -> QuantileFit:
    """Fit yₜ = a + b fₜ at quantile ``tau`` and the intercept-only benchmark.

    ``method`` is ``"enumerate"`` (exact, O(T³)), ``"lp"``, or ``"auto"``
    (enumeration up to T = 12).
    """
    y = check_series(y, name="yields")
    f = check_series(index, len(y))
    if not 0.0 < tau < 1.0:
        raise ValueError("tau must lie in (0, 1)")
    if np.ptp(f) == 0:
        raise DegenerateIndexError("index is constant over time")
    if method == "auto":
        method = "enumerate" if len(y) <= ENUMERATION_MAX_T else "lp"
    if method == "enumerate":
        v, a, b = _enumerate(y, f, tau)
    elif method == "lp":
        v, a, b = _linprog(y, f, tau)
    else:
        raise ValueError(f"unknown method {method!r}")
    v_null, q = _null_fit(y, tau)
    if v > v_null:
        # slope 0 through the τ-quantile is feasible; only rounding can put us here
        v, a, b = v_null, q, 0.0
    return QuantileFit(tau, v, v_null, a, b)


def quantile_r2_bar(
    panel: YieldPanel, index, tau: float = 0.3, method: str = "auto"
) -> QuantileR2:
    """Per-field quantile fits and their average pseudo-R².

    ``r2q_bar`` averages 1 - Vᵢ(f)/Vᵢ(1) over fields; ``pooled`` is
    1 - ΣVᵢ(f)/ΣVᵢ(1). Fields with constant yields (Vᵢ(1) = 0) are excluded
    from both and counted in ``n_degenerate``.
    """
    f = check_series(getattr(index, "values", index), panel.t)
    fits = []
    for fid, y in zip(panel.field_ids, panel.values):
        try:
            fits.append(quantile_fit(y, f, tau, method))
        except QuantileSolverError as exc:
            raise QuantileSolverError(f"field {fid!r}: {exc}") from exc
    ok = [fit for fit in fits if fit.v_null > 0]
    if not ok:
        nan = float("nan")
        return QuantileR2(tuple(fits), nan, nan, len(fits))
    r2q = float(np.mean([fit.pseudo_r2 for fit in ok]))
    pooled = 1.0 - sum(fit.v_model for fit in ok) / sum(fit.v_null for fit in ok)
    return QuantileR2(tuple(fits), r2q, float(pooled), len(fits) - len(ok))
