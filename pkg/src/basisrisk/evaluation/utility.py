"""Expected-utility evaluation of an area-yield insurance scheme.

The scheme pays Iₜ = max(λ·ȳ.. - ȳ.ₜ, 0) when the zone mean falls below a
trigger share λ of its long-run level, at a fair premium π = mean(Iₜ). Fields
are compared through CRRA certainty equivalents, with and without the scheme,
and through the farm-equivalent coverage: the individual-insurance trigger
that gives the same certainty equivalent as the index scheme.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .._validation import check_series
from ..panel import YieldPanel

logger = logging.getLogger(__name__)

DEFAULT_TRIGGER = 0.9
DEFAULT_CRRA = 1.5
COVERAGE_BRACKET = (0.0, 1.5)


@dataclass(frozen=True, eq=False)
class InsuranceScheme:
    trigger: float
    premium: float
    indemnities: np.ndarray

    @property
    def never_pays(self) -> bool:
        return not np.any(self.indemnities > 0)

    @property
    def net_transfer(self) -> np.ndarray:
        """Iₜ - π, mean zero by construction."""
        return self.indemnities - self.premium


@dataclass(frozen=True, eq=False)
class UtilityEvaluation:
    """Per-field results; excluded fields have NaN entries."""

    crra_coef: float
    field_ids: tuple[str, ...]
    ce_insured: np.ndarray
    ce_uninsured: np.ndarray
    farm_equiv_coverage: np.ndarray
    coverage_saturation: tuple[str | None, ...]
    excluded: tuple[str, ...]


@dataclass(frozen=True)
class CoverageResult:
    level: float
    saturated: str | None = None  # "lower", "upper" or None
    monotone: bool = True


def _indemnity(trigger: float, series: np.ndarray) -> np.ndarray:
    return np.maximum(trigger * series.mean() - series, 0.0)


def build_scheme(zone_means, trigger: float = DEFAULT_TRIGGER) -> InsuranceScheme:
    """Indemnities and fair premium from the zone-mean series."""
    y = check_series(zone_means, name="zone_means")
    if len(y) < 2:
        raise ValueError("need at least two periods")
    if not 0.0 < trigger <= 1.0:
        raise ValueError("trigger must lie in (0, 1]")
    ind = _indemnity(trigger, y)
    ind.setflags(write=False)
    scheme = InsuranceScheme(float(trigger), float(ind.mean()), ind)
    if scheme.never_pays:
        logger.info("scheme never pays at trigger %.3g", trigger)
    return scheme


def crra_utility(y, crra_coef: float = DEFAULT_CRRA):
    """Iso-elastic utility y^(1-θ)/(1-θ); log y at θ = 1."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("CRRA utility needs strictly positive arguments")
    if crra_coef == 1.0:
        return np.log(y)
    return y ** (1.0 - crra_coef) / (1.0 - crra_coef)


def certainty_equivalent(y, crra_coef: float = DEFAULT_CRRA) -> float:
    """Sure amount with the same expected CRRA utility as the equally likely outcomes ``y``."""
    y = np.asarray(y, dtype=float)
    if np.any(y <= 0):
        raise ValueError("certainty equivalent needs strictly positive outcomes")
    if crra_coef == 1.0:
        return float(np.exp(np.mean(np.log(y))))
    p = 1.0 - crra_coef
    return float(np.mean(y**p) ** (1.0 / p))


def _ce_rows(post: np.ndarray, crra_coef: float) -> np.ndarray:
    if crra_coef == 1.0:
        return np.exp(np.mean(np.log(post), axis=-1))
    p = 1.0 - crra_coef
    return np.mean(post**p, axis=-1) ** (1.0 / p)


def _individual_post(y: np.ndarray, levels) -> np.ndarray:
    """Post-insurance yields under fair individual insurance, one row per level."""
    levels = np.atleast_1d(np.asarray(levels, dtype=float))
    ind = np.maximum(levels[:, None] * y.mean() - y[None, :], 0.0)
    return y[None, :] + (ind - ind.mean(axis=1, keepdims=True))


def farm_equivalent_coverage(
    field_yields,
    scheme: InsuranceScheme,
    crra_coef: float = DEFAULT_CRRA,
    bracket: tuple[float, float] = COVERAGE_BRACKET,
    grid_points: int = 1501,
    tol: float = 1e-8,
) -> CoverageResult:
    """Individual-insurance trigger whose certainty equivalent matches the index scheme.

    Individual insurance pays max(λ·ȳᵢ - yᵢₜ, 0) at a fair premium. The
    certainty equivalent is scanned on a grid over ``bracket``; the largest
    crossing is refined by bisection until |ΔCE| < ``tol``. If the index
    scheme is no better than going uninsured the lower bound is returned with
    ``saturated="lower"``; if it beats every individual contract in the
    bracket, the upper bound with ``saturated="upper"``.
    """
    y = check_series(field_yields, len(scheme.indemnities), "field_yields")
    if np.any(y <= 0):
        raise ValueError("field yields must be strictly positive")
    target = certainty_equivalent(y + scheme.net_transfer, crra_coef)
    lo, hi = bracket

    def gap(levels):
        return _ce_rows(_individual_post(y, levels), crra_coef) - target

    grid = np.linspace(lo, hi, grid_points)
    g = gap(grid)
    slack = 1e-12 * max(abs(target), 1.0)
    monotone = bool(np.all(np.diff(g) >= -slack))
    if not monotone:
        logger.warning("certainty equivalent is not monotone in the coverage level")
    if g[0] >= -slack:
        return CoverageResult(float(lo), "lower", monotone)
    if g[-1] <= 0:
        return CoverageResult(float(hi), "upper" if g[-1] < 0 else None, monotone)
    k = int(np.flatnonzero(g <= 0)[-1])
    a, b = grid[k], grid[k + 1]
    ga = g[k]
    if abs(ga) < tol:
        return CoverageResult(float(a), None, monotone)
    for _ in range(200):
        m = 0.5 * (a + b)
        gm = float(gap(m)[0])
        if abs(gm) < tol or b - a < 1e-15:
            return CoverageResult(float(m), None, monotone)
        if gm <= 0:
            a = m
        else:
            b = m
    return CoverageResult(float(0.5 * (a + b)), None, monotone)


def evaluate_eu(
    panel: YieldPanel,
    scheme: InsuranceScheme | None = None,
    crra_coef: float = DEFAULT_CRRA,
    trigger: float = DEFAULT_TRIGGER,
    coverage: bool = True,
) -> UtilityEvaluation:
    """Certainty equivalents of every field with and without the index scheme.

    ``scheme`` defaults to the zone-mean scheme at ``trigger``. Fields whose
    insured or uninsured yields are not strictly positive are excluded (CRRA
    is undefined there) and listed in ``excluded``. With ``coverage`` the
    farm-equivalent coverage is also computed per field.
    """
    if scheme is None:
        scheme = build_scheme(panel.values.mean(axis=0), trigger)
    if len(scheme.indemnities) != panel.t:
        raise ValueError("scheme length does not match the panel's periods")
    n = panel.n
    ce_in = np.full(n, np.nan)
    ce_out = np.full(n, np.nan)
    cov = np.full(n, np.nan)
    sat: list[str | None] = [None] * n
    excluded = []
    transfer = scheme.net_transfer
    for i, (fid, y) in enumerate(zip(panel.field_ids, panel.values)):
        post = y + transfer
        if np.any(post <= 0) or np.any(y <= 0):
            excluded.append(fid)
            sat[i] = "excluded"
            continue
        ce_in[i] = certainty_equivalent(post, crra_coef)
        ce_out[i] = certainty_equivalent(y, crra_coef)
        if coverage and np.ptp(y) > 0:
            res = farm_equivalent_coverage(y, scheme, crra_coef)
            cov[i] = res.level
            sat[i] = res.saturated
    if excluded:
        logger.info("%d field(s) excluded: non-positive yields", len(excluded))
    return UtilityEvaluation(
        float(crra_coef), tuple(panel.field_ids), ce_in, ce_out, cov, tuple(sat), tuple(excluded)
    )
