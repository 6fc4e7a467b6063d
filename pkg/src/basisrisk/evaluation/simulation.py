"""Long synthetic yield histories for a zone, built from its short observed panel.

Each field is regressed on the zone mean (yᵢₜ = αᵢ + βᵢ ȳₜ + εᵢₜ). A new
zone-mean history is drawn from a normal fitted to the observed zone means, and
field yields are drawn as Normal(α̂ᵢ + β̂ᵢ ŷₜ, σ̂ᵢ). Draws are truncated at zero
so CRRA utilities stay defined.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtr, ndtri

from ..decomposition import _ols_arrays
from ..moments import DegenerateError
from ..panel import YieldPanel

logger = logging.getLogger(__name__)

DEFAULT_HORIZON = 30
TRUNCATION_WARN_RATE = 0.05


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    horizon: int
    rng_seed: int
    mean: float
    sd: float
    alpha: np.ndarray
    beta: np.ndarray
    sigma: np.ndarray

    def __post_init__(self):
        if self.horizon < 2:
            raise ValueError("horizon must be at least 2")
        if np.any(np.asarray(self.sigma) < 0):
            raise ValueError("residual standard deviations must be non-negative")

    @classmethod
    def from_panel(cls, panel: YieldPanel, horizon: int = DEFAULT_HORIZON, rng_seed: int = 0) -> "SimulationConfig":
        """Fit the zone-mean distribution and per-field regressions on the zone mean.

        The zone-mean sd uses T - 1 degrees of freedom, the residual sd T - 2.
        """
        zm = panel.values.mean(axis=0)
        sd = float(np.std(zm, ddof=1))
        if not sd > 0:
            raise DegenerateError("zone mean is constant; cannot fit its distribution")
        alpha, beta, _, _, _, resid_sd = _ols_arrays(panel.values, zm)
        return cls(int(horizon), int(rng_seed), float(zm.mean()), sd, alpha, beta, resid_sd)


@dataclass(frozen=True, eq=False)
class SimulationResult:
    panel: YieldPanel
    zone_means: np.ndarray
    truncation_rate: float


def _stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def _truncated_normal(loc, scale, rng: np.random.Generator) -> tuple[np.ndarray, int]:
    """Normal(loc, scale) conditioned on > 0.

    Draws plain normals, then replaces the non-positive ones by inverse-CDF
    draws from the conditional law. Returns the draws and how many were replaced.
    """
    loc = np.asarray(loc, dtype=float)
    scale = np.broadcast_to(np.asarray(scale, dtype=float), loc.shape)
    x = loc + scale * rng.standard_normal(loc.shape)
    bad = x <= 0
    k = int(bad.sum())
    if k:
        lb, sb = loc[bad], scale[bad]
        with np.errstate(divide="ignore", invalid="ignore"):
            p = ndtr(lb / sb)  # P(X > 0)
        if np.any(~(p > 0)):
            raise DegenerateError("simulated mean is too far below zero to truncate")
        u = rng.uniform(size=k)
        x[bad] = lb - sb * ndtri(u * p)
    return x, k


def run_simulation(panel: YieldPanel, config: SimulationConfig) -> SimulationResult:
    """Draw ``config.horizon`` periods for every field of ``panel``.

    The zone-mean history uses the stream keyed ``(seed, 0)`` and field i the
    stream ``(seed, 1, i)``, so results do not depend on evaluation order.
    """
    n = panel.n
    if len(config.alpha) != n:
        raise ValueError("config was fitted on a panel with a different number of fields")
    h = config.horizon
    zm, k0 = _truncated_normal(np.full(h, config.mean), config.sd, _stream(config.rng_seed, 0))
    out = np.empty((n, h))
    replaced = 0
    for i in range(n):
        loc = config.alpha[i] + config.beta[i] * zm
        if config.sigma[i] == 0:
            if np.any(loc <= 0):
                raise DegenerateError(f"field {panel.field_ids[i]!r}: deterministic draw below zero")
            out[i] = loc
            continue
        out[i], k = _truncated_normal(loc, config.sigma[i], _stream(config.rng_seed, 1, i))
        replaced += k
    rate = (replaced + k0) / float(n * h + h)
    if rate > TRUNCATION_WARN_RATE:
        logger.warning("%.1f%% of simulated draws were truncated at zero", 100 * rate)
    width = len(str(h))
    periods = tuple(f"s{j + 1:0{width}d}" for j in range(h))
    sim = YieldPanel(panel.fields, periods, out)
    zm.setflags(write=False)
    return SimulationResult(sim, zm, rate)


def simulate_yields(panel: YieldPanel, config: SimulationConfig | None = None, **fit_kw) -> YieldPanel:
    """Simulated panel with ``config.horizon`` periods (fitted from ``panel`` if not given)."""
    if config is None:
        config = SimulationConfig.from_panel(panel, **fit_kw)
    return run_simulation(panel, config).panel
