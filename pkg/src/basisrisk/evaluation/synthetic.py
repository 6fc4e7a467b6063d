"""Synthetic yield panels with known population structure.

``generate_one_factor`` draws yᵢₜ = αᵢ + βᵢ Fₜ + εᵢₜ and returns the true
parameters, so tests can compare sample statistics with their population
values. ``equicorrelated_panel`` builds data whose *sample* correlation matrix
is exactly equicorrelated.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from ..panel import YieldPanel

Dist = Union[float, tuple[float, float], Callable[[np.random.Generator, int], np.ndarray]]


@dataclass(frozen=True, eq=False)
class OneFactorTruth:
    intercepts: np.ndarray
    loadings: np.ndarray
    noise_sd: np.ndarray
    factor: np.ndarray
    factor_sd: float

    def covariance(self) -> np.ndarray:
        """Population Σ = var(F) ββ' + diag(σ²)."""
        b = self.loadings
        return self.factor_sd**2 * np.outer(b, b) + np.diag(self.noise_sd**2)

    def correlation(self) -> np.ndarray:
        s = self.covariance()
        d = 1.0 / np.sqrt(np.diag(s))
        return s * np.outer(d, d)

    def optimal_share(self, kind: str = "corr") -> float:
        m = self.correlation() if kind == "corr" else self.covariance()
        vals = np.linalg.eigvalsh(m)
        return float(vals[-1] / vals.sum())


def _draw(dist: Dist, rng: np.random.Generator, n: int) -> np.ndarray:
    if callable(dist):
        out = np.asarray(dist(rng, n), dtype=float)
    elif isinstance(dist, tuple):
        lo, hi = dist
        out = rng.uniform(lo, hi, size=n)
    else:
        out = np.full(n, float(dist))
    if out.shape != (n,):
        raise ValueError(f"distribution returned shape {out.shape}, expected ({n},)")
    return out


def generate_one_factor(
    n: int,
    t: int,
    loading_dist: Dist = (0.5, 1.5),
    noise_sd_dist: Dist = 1.0,
    rng_seed: int = 0,
    intercept: Dist = 10.0,
    factor_sd: float = 1.0,
) -> tuple[YieldPanel, OneFactorTruth]:
    """Panel from a one-factor model with Gaussian factor and noise.

    Distributions are given as a constant, a ``(low, high)`` uniform range, or
    a callable ``(rng, size) -> array``. The intercept keeps yields positive;
    a draw that still goes negative raises ``ValueError``.
    """
    if n < 1 or t < 2:
        raise ValueError("need n >= 1 fields and t >= 2 periods")
    rng = np.random.default_rng(rng_seed)
    alpha = _draw(intercept, rng, n)
    beta = _draw(loading_dist, rng, n)
    sd = _draw(noise_sd_dist, rng, n)
    if np.any(sd < 0):
        raise ValueError("noise standard deviations must be non-negative")
    factor = rng.normal(0.0, factor_sd, size=t)
    eps = rng.normal(size=(n, t)) * sd[:, None]
    y = alpha[:, None] + beta[:, None] * factor[None, :] + eps
    if np.any(y < 0):
        raise ValueError("generated negative yields; raise the intercept")
    truth = OneFactorTruth(alpha, beta, sd, factor, float(factor_sd))
    return YieldPanel.from_array(y), truth


def equicorrelated_panel(
    n: int, rho: float, t: int | None = None, rng_seed: int = 0, sd: float = 1.0
) -> YieldPanel:
    """Panel whose sample correlation matrix is exactly (1-ρ)I + ρ11'.

    Needs ``t >= n + 1`` (default ``n + 1``) so the demeaned rows can be
    built from orthonormal, mean-zero period vectors. Every field has sample
    standard deviation ``sd`` and a mean large enough to keep yields positive.
    """
    if n > 1 and not -1.0 / (n - 1) < rho <= 1.0:
        raise ValueError("rho must lie in (-1/(n-1), 1]")
    t = n + 1 if t is None else t
    if t < n + 1:
        raise ValueError("need t >= n + 1")
    rng = np.random.default_rng(rng_seed)
    a = rng.normal(size=(t, n))
    a -= a.mean(axis=0)
    q, _ = np.linalg.qr(a)  # t x n, orthonormal mean-zero columns
    c = (1.0 - rho) * np.eye(n) + rho * np.ones((n, n))
    evals, evecs = np.linalg.eigh(c)
    root = evecs * np.sqrt(np.clip(evals, 0.0, None))
    z = root @ q.T  # n x t, rows with Gram matrix c
    # |z| <= 1 entrywise, so this level keeps every yield positive
    level = sd * np.sqrt(t - 1) + 1.0
    y = level + sd * z * np.sqrt(t - 1)
    return YieldPanel.from_array(y)
