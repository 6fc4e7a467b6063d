"""Field-level yield panels: data model, CSV ingestion and spatial/zonal subsetting.

A panel holds N fields observed over T periods. Values are stored field-major
(N x T); the estimators in :mod:`basisrisk.estimators` take the transposed
periods x fields layout that scikit-learn expects.
"""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

EARTH_RADIUS_M = 6_371_000.0

LEVELS = ("L1", "L2", "L3")
_LEVEL_ATTR = {"L1": "zone_l1", "L2": "zone_l2", "L3": "zone_l3"}

REQUIRED_COLUMNS = ("field_id", "period", "yield")
OPTIONAL_COLUMNS = ("lon", "lat", "zone_l1", "zone_l2", "zone_l3", "period_order")
FILTER_POLICIES = ("reject", "drop_incomplete_fields")


class PanelError(ValueError):
    """Base class for invalid panel input."""


class SchemaError(PanelError):
    pass


class BalanceError(PanelError):
    pass


class ParseError(PanelError):
    pass


class MetadataError(PanelError):
    pass


class ZoneNotFoundError(PanelError, KeyError):
    def __str__(self):  # KeyError would quote the message
        return str(self.args[0]) if self.args else ""


@dataclass(frozen=True)
class FieldMeta:
    field_id: str
    lon: float | None = None
    lat: float | None = None
    zone_l1: str | None = None
    zone_l2: str | None = None
    zone_l3: str | None = None

    def zone(self, level: str) -> str | None:
        return getattr(self, _LEVEL_ATTR[_check_level(level)])

    @property
    def has_coords(self) -> bool:
        return self.lon is not None and self.lat is not None


@dataclass(frozen=True, eq=False)
class YieldPanel:
    """Balanced N x T yield matrix with per-field metadata.

    ``values`` is made read-only on construction. ``dropped`` lists the fields
    removed at load time by the ``drop_incomplete_fields`` policy.
    """

    fields: tuple[FieldMeta, ...]
    periods: tuple[str, ...]
    values: np.ndarray
    dropped: tuple[str, ...] = field(default=())

    def __post_init__(self):
        fields = tuple(self.fields)
        periods = tuple(str(p) for p in self.periods)
        values = np.array(self.values, dtype=float, copy=True)
        if values.ndim != 2:
            raise PanelError(f"values must be 2-D (fields x periods), got shape {values.shape}")
        n, t = values.shape
        if n < 1:
            raise PanelError("panel needs at least one field")
        if t < 2:
            raise PanelError(f"panel needs at least two periods, got {t}")
        if len(fields) != n or len(periods) != t:
            raise PanelError(
                f"metadata length mismatch: {len(fields)} fields / {len(periods)} periods "
                f"for values of shape {values.shape}"
            )
        ids = [f.field_id for f in fields]
        if len(set(ids)) != n:
            dup = sorted({i for i in ids if ids.count(i) > 1})
            raise PanelError(f"duplicate field ids: {dup[:10]}")
        if len(set(periods)) != t:
            raise PanelError("duplicate period labels")
        if not np.all(np.isfinite(values)):
            raise PanelError("yields must be finite")
        if np.any(values < 0):
            i, j = np.argwhere(values < 0)[0]
            raise PanelError(f"negative yield for field {ids[i]!r}, period {periods[j]!r}")
        _check_nesting(fields)
        values.setflags(write=False)
        object.__setattr__(self, "fields", fields)
        object.__setattr__(self, "periods", periods)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "dropped", tuple(self.dropped))

    @classmethod
    def from_array(cls, values, field_ids=None, periods=None, **zone_labels) -> "YieldPanel":
        """Build a panel from an N x T array with generated ids.

        ``zone_labels`` may hold ``zone_l1``/``zone_l2``/``zone_l3``/``lon``/``lat``
        sequences of length N.
        """
        values = np.asarray(values, dtype=float)
        n, t = values.shape
        if field_ids is None:
            width = len(str(n - 1))
            field_ids = [f"f{i:0{width}d}" for i in range(n)]
        if periods is None:
            width = len(str(t - 1))
            periods = [f"p{j:0{width}d}" for j in range(t)]
        metas = []
        for i, fid in enumerate(field_ids):
            kw = {k: (None if v[i] is None else v[i]) for k, v in zone_labels.items()}
            for key in ("lon", "lat"):
                if kw.get(key) is not None:
                    kw[key] = float(kw[key])
            for key in ("zone_l1", "zone_l2", "zone_l3"):
                if kw.get(key) is not None:
                    kw[key] = str(kw[key])
            metas.append(FieldMeta(str(fid), **kw))
        return cls(tuple(metas), tuple(periods), values)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def t(self) -> int:
        return self.values.shape[1]

    @property
    def field_ids(self) -> list[str]:
        return [f.field_id for f in self.fields]

    def has_level(self, level: str) -> bool:
        attr = _LEVEL_ATTR[_check_level(level)]
        return all(getattr(f, attr) is not None for f in self.fields)

    def zone_ids(self, level: str) -> list[str]:
        """Distinct zone labels at ``level`` in first-appearance order."""
        if not self.has_level(level):
            raise MetadataError(f"level {level} is not populated for every field")
        seen = dict.fromkeys(f.zone(level) for f in self.fields)
        return list(seen)

    def coords(self) -> np.ndarray:
        """(N, 2) array of (lon, lat) in degrees."""
        if not all(f.has_coords for f in self.fields):
            missing = [f.field_id for f in self.fields if not f.has_coords]
            raise MetadataError(f"{len(missing)} field(s) lack coordinates, e.g. {missing[:5]}")
        return np.array([(f.lon, f.lat) for f in self.fields], dtype=float)

    def take(self, idx: Sequence[int] | np.ndarray) -> "YieldPanel":
        idx = np.asarray(idx, dtype=int)
        return YieldPanel(
            tuple(self.fields[i] for i in idx), self.periods, self.values[idx]
        )

    def with_values(self, values, periods=None) -> "YieldPanel":
        return replace(
            self,
            values=values,
            periods=self.periods if periods is None else tuple(periods),
            dropped=(),
        )


def _check_level(level: str) -> str:
    if level not in _LEVEL_ATTR:
        raise MetadataError(f"unknown zone level {level!r}; expected one of {LEVELS}")
    return level


def _check_nesting(fields: Iterable[FieldMeta]) -> None:
    # each finer label must map to exactly one coarser label
    for fine, coarse in (("zone_l3", "zone_l2"), ("zone_l2", "zone_l1")):
        parent: dict[str, str] = {}
        for f in fields:
            a, b = getattr(f, fine), getattr(f, coarse)
            if a is None or b is None:
                continue
            prev = parent.setdefault(a, b)
            if prev != b:
                raise MetadataError(
                    f"{fine}={a!r} maps to both {coarse}={prev!r} and {b!r}"
                )


# --------------------------------------------------------------------------
# ingestion
# --------------------------------------------------------------------------

def load_panel(
    path: str | Path,
    schema: Mapping[str, str] | None = None,
    filter_policy: str = "reject",
) -> YieldPanel:
    """Read a long-format yield CSV into a balanced :class:`YieldPanel`.

    Parameters
    ----------
    path : path to a CSV with columns ``field_id, period, yield`` and optional
        ``lon, lat, zone_l1, zone_l2, zone_l3, period_order``.
    schema : optional mapping from canonical column name to the name used in
        the file, e.g. ``{"yield": "yield_t_ha"}``.
    filter_policy : ``"reject"`` raises on an unbalanced panel;
        ``"drop_incomplete_fields"`` removes fields missing any period and
        records them in ``panel.dropped``.
    """
    if filter_policy not in FILTER_POLICIES:
        raise ValueError(f"filter_policy must be one of {FILTER_POLICIES}")
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    rename = {v: k for k, v in (schema or {}).items()}
    df = df.rename(columns=rename)
    missing = [c for c in REQUIRED_COLUMNS if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing required column(s) {missing}")

    yields = np.empty(len(df))
    for k, raw in enumerate(df["yield"]):
        try:
            yields[k] = float(raw)
        except ValueError:
            # header is line 1
            raise ParseError(f"{path}: row {k + 2}: non-numeric yield {raw!r}") from None
    if not np.all(np.isfinite(yields)):
        k = int(np.flatnonzero(~np.isfinite(yields))[0])
        raise ParseError(f"{path}: row {k + 2}: non-finite yield {df['yield'].iloc[k]!r}")
    df["yield"] = yields

    if df.duplicated(["field_id", "period"]).any():
        dup = df.loc[df.duplicated(["field_id", "period"]), ["field_id", "period"]].iloc[0]
        raise BalanceError(f"{path}: duplicate cell field={dup.field_id!r} period={dup.period!r}")

    periods = _ordered_periods(df, path)
    field_ids = list(dict.fromkeys(df["field_id"]))
    wide = df.pivot(index="field_id", columns="period", values="yield")
    wide = wide.reindex(index=field_ids, columns=periods)
    complete = wide.notna().all(axis=1)
    dropped: tuple[str, ...] = ()
    if not complete.all():
        bad = list(wide.index[~complete])
        if filter_policy == "reject":
            raise BalanceError(
                f"{path}: unbalanced panel, {len(bad)} field(s) lack some period, e.g. {bad[:5]}"
            )
        dropped = tuple(bad)
        logger.info("dropped %d incomplete field(s)", len(bad))
        wide = wide.loc[complete]
        field_ids = [f for f in field_ids if f not in set(bad)]
    if not field_ids:
        raise BalanceError(f"{path}: no complete fields left")

    metas = _field_metadata(df, field_ids, path)
    panel = YieldPanel(tuple(metas), tuple(periods), wide.to_numpy(dtype=float), dropped)
    return panel


def _ordered_periods(df: pd.DataFrame, path) -> list[str]:
    if "period_order" in df.columns:
        order = df.groupby("period")["period_order"].agg(lambda s: set(s))
        if any(len(s) != 1 for s in order):
            raise ParseError(f"{path}: inconsistent period_order within a period")
        try:
            key = {p: float(next(iter(s))) for p, s in order.items()}
        except ValueError:
            raise ParseError(f"{path}: non-numeric period_order") from None
        return sorted(key, key=lambda p: (key[p], p))
    return sorted(df["period"].unique())


def _field_metadata(df: pd.DataFrame, field_ids: list[str], path) -> list[FieldMeta]:
    meta_cols = [c for c in ("lon", "lat", "zone_l1", "zone_l2", "zone_l3") if c in df.columns]
    if not meta_cols:
        return [FieldMeta(fid) for fid in field_ids]
    first = df.drop_duplicates(["field_id", *meta_cols])
    counts = first["field_id"].value_counts()
    if (counts > 1).any():
        bad = counts.index[counts > 1][0]
        raise MetadataError(f"{path}: field {bad!r} has inconsistent metadata across rows")
    rows = first.set_index("field_id")
    metas = []
    for fid in field_ids:
        row = rows.loc[fid]
        kw: dict = {}
        for c in meta_cols:
            raw = row[c]
            if raw == "":
                continue
            if c in ("lon", "lat"):
                try:
                    kw[c] = float(raw)
                except ValueError:
                    raise ParseError(f"{path}: field {fid!r}: non-numeric {c} {raw!r}") from None
            else:
                kw[c] = raw
        metas.append(FieldMeta(fid, **kw))
    return metas


def write_panel(panel: YieldPanel, path: str | Path) -> None:
    """Write ``panel`` in the long yield-CSV layout ``load_panel`` reads.

    Floats are written with ``repr`` so a reload is bit-identical.
    """
    cols = ["field_id", "period", "yield"]
    extra = []
    if all(f.has_coords for f in panel.fields):
        extra += ["lon", "lat"]
    for lvl in LEVELS:
        if panel.has_level(lvl):
            extra.append(_LEVEL_ATTR[lvl])
    order_needed = list(panel.periods) != sorted(panel.periods)
    if order_needed:
        extra.append("period_order")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(cols + extra)
        for f, row in zip(panel.fields, panel.values):
            tail = []
            for c in extra:
                if c == "period_order":
                    continue
                v = getattr(f, c)
                tail.append(repr(v) if isinstance(v, float) else v)
            for j, (p, y) in enumerate(zip(panel.periods, row)):
                line = [f.field_id, p, repr(float(y))] + tail
                if order_needed:
                    line.append(str(j))
                w.writerow(line)


# --------------------------------------------------------------------------
# subsetting
# --------------------------------------------------------------------------

def subset_by_zone(panel: YieldPanel, level: str, zone_id: str) -> YieldPanel:
    """Fields whose label at ``level`` equals ``zone_id``; periods unchanged."""
    if not panel.has_level(level):
        raise MetadataError(f"level {level} is not populated for every field")
    idx = [i for i, f in enumerate(panel.fields) if f.zone(level) == zone_id]
    if not idx:
        raise ZoneNotFoundError(f"no field with {level}={zone_id!r}")
    return panel.take(idx)


def split_by_zone(panel: YieldPanel, level: str) -> dict[str, YieldPanel]:
    """All zone subsets at ``level``, keyed by zone id in first-appearance order."""
    if level == "L0":
        return {"all": panel}
    if not panel.has_level(level):
        raise MetadataError(f"level {level} is not populated for every field")
    groups: dict[str, list[int]] = {}
    for i, f in enumerate(panel.fields):
        groups.setdefault(f.zone(level), []).append(i)
    return {z: panel.take(idx) for z, idx in groups.items()}


def haversine_m(lon1, lat1, lon2, lat2) -> np.ndarray:
    """Great-circle distance in meters (degrees in, broadcasting)."""
    lon1, lat1, lon2, lat2 = (np.radians(np.asarray(a, dtype=float)) for a in (lon1, lat1, lon2, lat2))
    dlat = lat2 - lat1
    dlon = lon2 - lon1
    h = np.sin(dlat / 2.0) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin(dlon / 2.0) ** 2
    return 2.0 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(h, 0.0, 1.0)))


def neighbor_mask(distances: np.ndarray, center: int, radius: float, exclusion: float) -> np.ndarray:
    """Membership mask for one center given its distance row.

    ``exclusion == 0`` means no exclusion ring (co-located fields are kept).
    """
    if exclusion > 0:
        mask = (distances > exclusion) & (distances <= radius)
    else:
        mask = distances <= radius
    mask[center] = True
    return mask


def neighborhood(panel: YieldPanel, center: str, radius: float, exclusion: float = 0.0) -> YieldPanel:
    """Fields within ``radius`` meters of ``center`` but farther than ``exclusion``.

    The center field is always included. If ``exclusion >= radius`` only the
    center remains.
    """
    if radius < 0 or exclusion < 0 or math.isnan(radius) or math.isnan(exclusion):
        raise ValueError("radius and exclusion must be non-negative")
    xy = panel.coords()
    try:
        c = panel.field_ids.index(center)
    except ValueError:
        raise ZoneNotFoundError(f"unknown field {center!r}") from None
    d = haversine_m(xy[c, 0], xy[c, 1], xy[:, 0], xy[:, 1])
    return panel.take(np.flatnonzero(neighbor_mask(d, c, radius, exclusion)))


# --------------------------------------------------------------------------
# external index series
# --------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ExternalSeries:
    zone_id: str
    periods: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        v = np.array(self.values, dtype=float, copy=True).ravel()
        if len(v) != len(self.periods):
            raise PanelError(f"zone {self.zone_id!r}: {len(v)} values for {len(self.periods)} periods")
        if not np.all(np.isfinite(v)):
            raise PanelError(f"zone {self.zone_id!r}: non-finite external values")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "periods", tuple(str(p) for p in self.periods))

    def aligned(self, periods: Sequence[str]) -> np.ndarray:
        if tuple(periods) != self.periods:
            raise PanelError(
                f"zone {self.zone_id!r}: period labels {self.periods} do not match panel {tuple(periods)}"
            )
        return self.values


def load_external(
    path: str | Path,
    periods: Sequence[str] | None = None,
    window: Iterable[str] | None = None,
    temporal_agg: str = "mean",
) -> dict[str, ExternalSeries]:
    """Read an external-index CSV ``zone_id,period,value[,subperiod]``.

    With a ``subperiod`` column (e.g. month within a season year), values are
    restricted to the ``window`` subperiods and aggregated per period with
    ``temporal_agg`` (``mean`` or ``sum``). ``periods`` fixes the output
    period order; zones missing any of them are left out.
    """
    if temporal_agg not in ("mean", "sum"):
        raise ValueError("temporal_agg must be 'mean' or 'sum'")
    df = pd.read_csv(path, dtype=str, keep_default_na=False, encoding="utf-8")
    missing = [c for c in ("zone_id", "period", "value") if c not in df.columns]
    if missing:
        raise SchemaError(f"{path}: missing required column(s) {missing}")
    try:
        df["value"] = [float(v) for v in df["value"]]
    except ValueError as exc:
        raise ParseError(f"{path}: non-numeric value ({exc})") from None
    if "subperiod" in df.columns:
        if window is not None:
            keep = {str(w) for w in window}
            df = df[df["subperiod"].isin(keep)]
        grouped = df.groupby(["zone_id", "period"], sort=False)["value"]
        df = (grouped.mean() if temporal_agg == "mean" else grouped.sum()).reset_index()
    elif df.duplicated(["zone_id", "period"]).any():
        raise BalanceError(f"{path}: duplicate (zone_id, period) rows without a subperiod column")
    out: dict[str, ExternalSeries] = {}
    for zone, g in df.groupby("zone_id", sort=False):
        s = dict(zip(g["period"], g["value"]))
        order = list(periods) if periods is not None else sorted(s)
        if any(p not in s for p in order):
            logger.info("zone %s lacks some periods in %s; skipped", zone, path)
            continue
        out[str(zone)] = ExternalSeries(str(zone), tuple(order), np.array([s[p] for p in order]))
    return out
