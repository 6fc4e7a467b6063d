"""Measurement-error regressions of predicted on ground-truth yields.

``b = α + γ a + ε`` is fit pooled, per unit over time (temporal) and per period
across units (spatial). γ = 1 means the predictions are conditionally unbiased.
Inference on γ = 1 uses HC1 heteroskedasticity-robust standard errors; for the
temporal and spatial averages it runs on the demeaned (fixed-effects) pooled
regression.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..panel import PanelError, YieldPanel

logger = logging.getLogger(__name__)

MODES = ("pooled", "temporal", "spatial")
MIN_OBS = 3


@dataclass(frozen=True)
class MeasurementErrorFit:
    mode: str
    rho: float
    gamma: float
    p_gamma_eq_1: float
    se_gamma: float
    n_obs: int
    n_groups: int
    dropped: tuple[str, ...] = ()


def _slope_hc1(x: np.ndarray, y: np.ndarray, n_params: int) -> tuple[float, float, int]:
    """Slope of y on already-demeaned x (and y), its HC1 standard error, and residual df."""
    sxx = x @ x
    if not sxx > 0:
        raise PanelError("regressor has no variation")
    b = (x @ y) / sxx
    e = y - b * x
    n = len(x)
    df = n - n_params
    if df <= 0:
        raise PanelError("not enough observations for inference")
    var = (n / df) * np.sum(x * x * e * e) / sxx**2
    return float(b), float(np.sqrt(var)), df


def _p_eq_one(gamma: float, se: float, df: int) -> float:
    if se == 0:
        return 1.0 if gamma == 1.0 else 0.0
    return float(2.0 * stats.t.sf(abs(gamma - 1.0) / se, df))


def _corr(x: np.ndarray, y: np.ndarray) -> float:
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return float("nan")
    return float(np.clip(np.corrcoef(x, y)[0, 1], -1.0, 1.0))


def ols_hc1(a, b) -> tuple[float, float, float, int]:
    """OLS of ``b`` on ``a`` with intercept: (intercept, slope, HC1 se of slope, df)."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    slope, se, df = _slope_hc1(a - a.mean(), b - b.mean(), 2)
    return float(b.mean() - slope * a.mean()), slope, se, df


def align(truth: YieldPanel, pred: YieldPanel) -> tuple[list[str], list[str], np.ndarray, np.ndarray]:
    """Restrict both panels to their common units and periods."""
    units = [u for u in truth.field_ids if u in set(pred.field_ids)]
    periods = [p for p in truth.periods if p in set(pred.periods)]
    if not units or not periods:
        raise PanelError("truth and prediction panels share no (unit, period) cells")
    def pick(panel):
        ri = [panel.field_ids.index(u) for u in units]
        ci = [panel.periods.index(p) for p in periods]
        return panel.values[np.ix_(ri, ci)]
    return units, periods, pick(truth), pick(pred)


def measurement_error_fit(truth: YieldPanel, pred: YieldPanel, mode: str = "pooled") -> MeasurementErrorFit:
    """Regress predicted on ground-truth aggregates.

    ``mode`` is ``pooled`` (one regression over all cells), ``temporal``
    (per unit across periods, averaged) or ``spatial`` (per period across
    units, averaged). Groups with fewer than three cells or without variation
    are dropped and listed.
    """
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    units, periods, a, b = align(truth, pred)
    if mode == "pooled":
        x, y = a.ravel(), b.ravel()
        if len(x) < MIN_OBS:
            raise PanelError("need at least three matched cells")
        _, gamma, se, df = ols_hc1(x, y)
        return MeasurementErrorFit(mode, _corr(x, y), gamma, _p_eq_one(gamma, se, df), se, len(x), 1)

    if mode == "spatial":
        a, b = a.T, b.T
        labels = periods
    else:
        labels = units
    rhos, gammas, keep, dropped = [], [], [], []
    for lab, xa, yb in zip(labels, a, b):
        if len(xa) < MIN_OBS or np.ptp(xa) == 0 or np.ptp(yb) == 0:
            dropped.append(lab)
            continue
        _, g, _, _ = ols_hc1(xa, yb)
        gammas.append(g)
        rhos.append(_corr(xa, yb))
        keep.append((xa, yb))
    if dropped:
        logger.info("%s: dropped %d group(s) with < %d usable cells", mode, len(dropped), MIN_OBS)
    if not keep:
        raise PanelError(f"{mode}: no group has enough usable cells")
    xd = np.concatenate([x - x.mean() for x, _ in keep])
    yd = np.concatenate([y - y.mean() for _, y in keep])
    g_fe, se, df = _slope_hc1(xd, yd, len(keep) + 1)
    return MeasurementErrorFit(
        mode,
        float(np.mean(rhos)),
        float(np.mean(gammas)),
        _p_eq_one(g_fe, se, df),
        se,
        len(xd),
        len(keep),
        tuple(dropped),
    )
