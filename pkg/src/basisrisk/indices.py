"""Candidate indices and how they score against the optimal one.

Includes the subsample-mean experiment: means over small random subsets of a
zone's fields often beat the full zone mean on R̄², yet none beats the
eigenvector index.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
import pandas as pd

from ._parallel import pmap
from ._validation import check_series
from .decomposition import DegenerateIndexError, optimal_share, r2_bar, r2_total
from .moments import DegenerateError
from .panel import ExternalSeries, YieldPanel

logger = logging.getLogger(__name__)

SOURCES = ("output_based", "input_based")


@dataclass(frozen=True, eq=False)
class IndexSeries:
    values: np.ndarray
    kind: str = "custom"
    source: str = "output_based"

    def __post_init__(self):
        v = check_series(self.values).copy()
        if self.source not in SOURCES:
            raise ValueError(f"source must be one of {SOURCES}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    @property
    def degenerate(self) -> bool:
        return bool(np.ptp(self.values) == 0)

    def __len__(self):
        return len(self.values)


def zone_mean_index(panel: YieldPanel) -> IndexSeries:
    """Unweighted mean over fields, per period (the area-yield index)."""
    return IndexSeries(panel.values.mean(axis=0), "zone_mean")


def _subsample_mean(panel: YieldPanel, size: int, rng: np.random.Generator) -> np.ndarray:
    if not 1 <= size <= panel.n:
        raise ValueError(f"subsample size must be in [1, {panel.n}], got {size}")
    idx = np.sort(rng.choice(panel.n, size=size, replace=False))
    return panel.values[idx].mean(axis=0)


def _stream(seed: int, *key: int) -> np.random.Generator:
    # PCG64 seeded from (seed, key): independent of evaluation order
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))


def subsample_mean_index(panel: YieldPanel, size: int, rng_seed: int = 0) -> IndexSeries:
    """Mean of ``size`` fields drawn without replacement (PCG64, seed-deterministic)."""
    return IndexSeries(_subsample_mean(panel, size, _stream(rng_seed)), "subsample_mean")


def subsample_experiment(
    panel: YieldPanel,
    sizes: Sequence[int],
    replications: int = 200,
    rng_seed: int = 0,
    threads: int | None = None,
) -> pd.DataFrame:
    """R̄² of random subsample-mean indices, with zone-mean and optimal references.

    Returns tidy rows ``size, replication, r2_bar, kind``. Subsample rows have
    ``kind="subsample"``; the two reference rows come last with kinds
    ``zone_mean`` (size N) and ``optimal`` (no size). Each (size, replication)
    pair draws from its own PCG64 stream keyed on ``(rng_seed, size,
    replication)``.
    """
    sizes = [int(m) for m in sizes]
    for m in sizes:
        if not 1 <= m <= panel.n:
            raise ValueError(f"subsample size must be in [1, {panel.n}], got {m}")
    values = panel.values

    def one(job):
        m, r = job
        f = _subsample_mean(panel, m, _stream(rng_seed, m, r))
        try:
            return r2_bar(values, f)
        except DegenerateIndexError:
            return float("nan")

    jobs = [(m, r) for m in sizes for r in range(replications)]
    scores = pmap(one, jobs, threads)
    rows = [
        {"size": m, "replication": r, "r2_bar": s, "kind": "subsample"}
        for (m, r), s in zip(jobs, scores)
    ]
    rows.append({"size": panel.n, "replication": None, "r2_bar": r2_bar(values, values.mean(axis=0)), "kind": "zone_mean"})
    rows.append({"size": None, "replication": None, "r2_bar": optimal_share(panel), "kind": "optimal"})
    df = pd.DataFrame(rows, columns=["size", "replication", "r2_bar", "kind"])
    df["size"] = df["size"].astype("Int64")
    df["replication"] = df["replication"].astype("Int64")
    return df


# --------------------------------------------------------------------------
# design-risk report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class DesignRiskRow:
    index: str
    n_zones: int
    mean_r2_bar: float
    cor_with_opt: float
    missing_zones: tuple[str, ...] = ()


@dataclass(frozen=True, eq=False)
class DesignRiskReport:
    rows: tuple[DesignRiskRow, ...]
    per_zone: pd.DataFrame = field(repr=False)

    def __getitem__(self, name: str) -> DesignRiskRow:
        for row in self.rows:
            if row.index == name:
                return row
        raise KeyError(name)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            [(r.index, r.n_zones, r.mean_r2_bar, r.cor_with_opt) for r in self.rows],
            columns=["index", "n_zones", "mean_r2_bar", "cor_with_opt"],
        )


def _pearson(a: np.ndarray, b: np.ndarray) -> float:
    ok = ~(np.isnan(a) | np.isnan(b))
    a, b = a[ok], b[ok]
    if len(a) < 2 or np.ptp(a) == 0 or np.ptp(b) == 0:
        return float("nan")
    return float(np.clip(np.corrcoef(a, b)[0, 1], -1.0, 1.0))


def _score(panel: YieldPanel, values: np.ndarray, metric: str) -> float:
    try:
        return r2_bar(panel.values, values) if metric == "avg" else r2_total(panel.values, values)
    except DegenerateError:
        return float("nan")


def score_external(
    panels: Mapping[str, YieldPanel],
    series: Mapping[str, Mapping[str, ExternalSeries | IndexSeries | np.ndarray]],
    metric: str = "avg",
    threads: int | None = None,
) -> DesignRiskReport:
    """Score external (input-based) indices zone by zone against the optimal index.

    Parameters
    ----------
    panels : zone id -> yield panel of that zone.
    series : index name -> (zone id -> series aligned with the zone's periods).
    metric : ``avg`` (R̄²) or ``total`` (R̿²).

    The report always starts with ``optimal`` and ``zone_mean`` rows. Zones
    lacking a series for an index, or whose series is constant, are listed in
    that row's ``missing_zones`` and left out of its mean and correlation.
    """
    zones = list(panels)

    def zone_scores(z):
        p = panels[z]
        try:
            opt = optimal_share(p, metric)
        except DegenerateError:
            opt = float("nan")
        out = {"optimal": opt, "zone_mean": _score(p, p.values.mean(axis=0), metric)}
        for name, by_zone in series.items():
            s = by_zone.get(z)
            if s is None:
                out[name] = float("nan")
                continue
            if isinstance(s, ExternalSeries):
                v = s.aligned(p.periods)
            else:
                v = check_series(getattr(s, "values", s), p.t, name)
            out[name] = _score(p, v, metric)
        return out

    scores = pmap(zone_scores, zones, threads)
    per_zone = pd.DataFrame(scores, index=pd.Index(zones, name="zone_id"))
    opt = per_zone["optimal"].to_numpy(dtype=float)
    rows = []
    for name in ["optimal", "zone_mean", *series]:
        col = per_zone[name].to_numpy(dtype=float)
        ok = ~np.isnan(col)
        missing = tuple(z for z, good in zip(zones, ok) if not good)
        if missing and name not in ("optimal", "zone_mean"):
            logger.info("index %s: %d zone(s) without a usable series", name, len(missing))
        cor = float("nan") if name == "optimal" else _pearson(col, opt)
        mean = float(col[ok].mean()) if ok.any() else float("nan")
        rows.append(DesignRiskRow(name, int(ok.sum()), mean, cor, missing))
    return DesignRiskReport(tuple(rows), per_zone)

