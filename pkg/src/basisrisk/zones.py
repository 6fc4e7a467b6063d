"""Zonal risk across zone definitions: administrative levels and radius neighborhoods."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

from ._parallel import pmap
from .decomposition import optimal_share
from .moments import DegenerateError
from .panel import MetadataError, YieldPanel, haversine_m, neighbor_mask, split_by_zone

logger = logging.getLogger(__name__)

SWEEP_LEVELS = ("L0", "L1", "L2", "L3")


@dataclass(frozen=True)
class ZonalRiskRow:
    level: str
    zone_id: str
    n_fields: int
    r2_bar_opt: float
    zonal_risk: float
    area_km2: float | None = None


@dataclass(frozen=True, eq=False)
class ZonalSweep:
    rows: tuple[ZonalRiskRow, ...]
    summary: pd.DataFrame

    def rows_frame(self) -> pd.DataFrame:
        cols = ["level", "zone_id", "n_fields", "r2_bar_opt", "zonal_risk", "area_km2"]
        return pd.DataFrame([[getattr(r, c) for c in cols] for r in self.rows], columns=cols)


def _zone_row(level: str, zone_id: str, panel: YieldPanel, metric: str, area) -> ZonalRiskRow | None:
    try:
        share = optimal_share(panel, metric)
    except DegenerateError:
        logger.warning("zone %s/%s: every field has constant yields; skipped", level, zone_id)
        return None
    return ZonalRiskRow(level, zone_id, panel.n, share, 1.0 - share, area)


def zonal_sweep(
    panel: YieldPanel,
    levels: Iterable[str] = SWEEP_LEVELS,
    metric: str = "avg",
    areas: Mapping[tuple[str, str], float] | None = None,
    threads: int | None = None,
) -> ZonalSweep:
    """Best attainable R² (and its complement, zonal risk) for every zone at every level.

    ``L0`` treats the whole panel as a single zone. The per-level summary is the
    unweighted mean over that level's zone rows. ``areas`` optionally maps
    ``(level, zone_id)`` to an area in km².
    """
    levels = list(dict.fromkeys(levels))
    for lvl in levels:
        if lvl not in SWEEP_LEVELS:
            raise MetadataError(f"unknown level {lvl!r}; expected one of {SWEEP_LEVELS}")
        if lvl != "L0" and not panel.has_level(lvl):
            raise MetadataError(f"level {lvl} is not populated for every field")
    areas = areas or {}
    jobs = [
        (lvl, z, sub)
        for lvl in levels
        for z, sub in split_by_zone(panel, lvl).items()
    ]
    results = pmap(lambda j: _zone_row(j[0], j[1], j[2], metric, areas.get((j[0], j[1]))), jobs, threads)
    rows = tuple(r for r in results if r is not None)

    summary = []
    for lvl in levels:
        lr = [r for r in rows if r.level == lvl]
        if not lr:
            continue
        area = [r.area_km2 for r in lr if r.area_km2 is not None]
        summary.append(
            {
                "level": lvl,
                "n_units": len(lr),
                "n_fields_avg": float(np.mean([r.n_fields for r in lr])),
                "r2_bar_opt": float(np.mean([r.r2_bar_opt for r in lr])),
                "zonal_risk": float(np.mean([r.zonal_risk for r in lr])),
                "area_km2": float(np.mean(area)) if area else None,
            }
        )
    return ZonalSweep(rows, pd.DataFrame(summary))


def radius_sweep(
    panel: YieldPanel,
    radii: Sequence[float],
    exclusion: float = 50.0,
    min_fields: int = 10,
    metric: str = "avg",
    threads: int | None = None,
) -> pd.DataFrame:
    """Zonal R² in a circle around every field, for each radius.

    Every (field, radius) pair is computed twice: without an exclusion ring
    and with ``exclusion`` meters around the center removed (the center stays).
    Neighborhoods with fewer than ``min_fields`` fields are kept as rows with
    ``r2_bar_opt`` NaN and ``skipped=True``.

    Returns columns ``field_id, radius, exclusion, n_fields, r2_bar_opt,
    skipped`` ordered by field id, radius, then exclusion.
    """
    radii = sorted(float(r) for r in radii)
    if any(r < 0 for r in radii) or exclusion < 0:
        raise ValueError("radii and exclusion must be non-negative")
    xy = panel.coords()
    exclusions = sorted({0.0, float(exclusion)})
    order = sorted(range(panel.n), key=lambda i: panel.fields[i].field_id)

    def per_center(c):
        d = haversine_m(xy[c, 0], xy[c, 1], xy[:, 0], xy[:, 1])
        out = []
        for r in radii:
            for e in exclusions:
                mask = neighbor_mask(d, c, r, e)
                n = int(mask.sum())
                share = float("nan")
                if n >= min_fields:
                    try:
                        share = optimal_share(panel.values[mask], metric)
                    except DegenerateError:
                        pass
                out.append((panel.fields[c].field_id, r, e, n, share, n < min_fields))
        return out

    chunks = pmap(per_center, order, threads)
    rows = [row for chunk in chunks for row in chunk]
    return pd.DataFrame(
        rows, columns=["field_id", "radius", "exclusion", "n_fields", "r2_bar_opt", "skipped"]
    )


def radius_curve(sweep: pd.DataFrame) -> pd.DataFrame:
    """Mean ``r2_bar_opt`` over centers for each (exclusion, radius), skipping NaNs."""
    g = sweep.groupby(["exclusion", "radius"], sort=True)
    out = g["r2_bar_opt"].agg(["mean", "count"]).reset_index()
    return out.rename(columns={"mean": "r2_bar_opt", "count": "n_centers"})
