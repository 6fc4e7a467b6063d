import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from basisrisk import YieldPanel, load_external, load_panel, neighborhood, split_by_zone, subset_by_zone, write_panel
from basisrisk.panel import (
    BalanceError,
    FieldMeta,
    MetadataError,
    ParseError,
    PanelError,
    SchemaError,
    ZoneNotFoundError,
    haversine_m,
    neighbor_mask,
)

from conftest import write_long_csv


def _grid_rows(fields, periods, value=lambda i, j: 1.0 + i + 0.5 * j):
    return [(f, p, value(i, j)) for i, f in enumerate(fields) for j, p in enumerate(periods)]


def test_load_complete_csv(tmp_path):
    path = write_long_csv(tmp_path / "y.csv", _grid_rows("abc", ["2016", "2017", "2018", "2019"]))
    panel = load_panel(path)
    assert (panel.n, panel.t) == (3, 4)
    assert panel.field_ids == ["a", "b", "c"]
    assert panel.values[1, 2] == 1.0 + 1 + 1.0


def test_drop_incomplete_fields(tmp_path):
    rows = [r for r in _grid_rows("abc", ["2016", "2017", "2018"]) if not (r[0] == "a" and r[1] == "2018")]
    path = write_long_csv(tmp_path / "y.csv", rows)
    with pytest.raises(BalanceError):
        load_panel(path)
    panel = load_panel(path, filter_policy="drop_incomplete_fields")
    assert panel.field_ids == ["b", "c"]
    assert len(panel.dropped) == 1


def test_parse_error_names_row(tmp_path):
    rows = _grid_rows("ab", ["1", "2"])
    rows[2] = ("b", "1", "abc")
    path = write_long_csv(tmp_path / "y.csv", rows)
    with pytest.raises(ParseError, match="row 4"):
        load_panel(path)


def test_missing_column_is_schema_error(tmp_path):
    path = write_long_csv(tmp_path / "y.csv", [("a", "1")], header="field_id,period")
    with pytest.raises(SchemaError, match="yield"):
        load_panel(path)


def test_schema_mapping(tmp_path):
    rows = _grid_rows("ab", ["1", "2"])
    path = write_long_csv(tmp_path / "y.csv", rows, header="plot,year,t_ha")
    panel = load_panel(path, schema={"field_id": "plot", "period": "year", "yield": "t_ha"})
    assert panel.n == 2


def test_negative_and_nonfinite_rejected():
    with pytest.raises(PanelError):
        YieldPanel.from_array([[1.0, -1.0]])
    with pytest.raises(PanelError):
        YieldPanel.from_array([[1.0, np.nan]])
    with pytest.raises(PanelError):
        YieldPanel.from_array([[1.0]])


def test_nesting_inconsistency():
    fields = (FieldMeta("a", zone_l2="s1", zone_l3="w1"), FieldMeta("b", zone_l2="s2", zone_l3="w1"))
    with pytest.raises(MetadataError):
        YieldPanel(fields, ("1", "2"), np.ones((2, 2)))


def test_roundtrip_bit_identical(tmp_path, rng):
    values = rng.lognormal(size=(5, 4))
    fields = tuple(FieldMeta(f"f{i}", 36.1 + rng.normal() * 1e-3, -0.3, "c", "s", f"w{i % 2}") for i in range(5))
    panel = YieldPanel(fields, ("b", "a", "c", "d"), values)
    write_panel(panel, tmp_path / "p.csv")
    back = load_panel(tmp_path / "p.csv")
    assert back.periods == panel.periods
    assert np.array_equal(back.values, panel.values)
    assert [f.lon for f in back.fields] == [f.lon for f in panel.fields]


def test_periods_sorted_lexicographically(tmp_path):
    rows = _grid_rows("a", ["2019", "2017", "2018"])
    panel = load_panel(write_long_csv(tmp_path / "y.csv", rows))
    assert panel.periods == ("2017", "2018", "2019")


def test_subset_by_zone(zoned_panel):
    sub = subset_by_zone(zoned_panel, "L3", "w1")
    assert all(f.zone_l3 == "w1" for f in sub.fields)
    assert sub.n == 6
    with pytest.raises(ZoneNotFoundError):
        subset_by_zone(zoned_panel, "L3", "nope")
    bare = YieldPanel.from_array(np.ones((2, 2)) + np.eye(2))
    with pytest.raises(MetadataError):
        subset_by_zone(bare, "L1", "x")


def test_subset_single_field():
    panel = YieldPanel.from_array([[1.0, 2.0], [3.0, 4.0]], zone_l3=["w1", "w2"])
    assert subset_by_zone(panel, "L3", "w2").n == 1


@pytest.mark.parametrize("level", ["L1", "L2", "L3"])
def test_split_partitions(zoned_panel, level):
    parts = split_by_zone(zoned_panel, level)
    ids = [fid for p in parts.values() for fid in p.field_ids]
    assert sorted(ids) == sorted(zoned_panel.field_ids)
    assert len(ids) == len(set(ids))


def test_haversine_known_distance():
    # one degree of latitude on the 6371 km sphere
    d = haversine_m(0.0, 0.0, 0.0, 1.0)
    assert d == pytest.approx(6_371_000.0 * math.pi / 180.0, rel=1e-12)


def _collinear_panel():
    # fields at 0 m, 100 m, 300 m due north of the center
    deg = 180.0 / (math.pi * 6_371_000.0)
    fields = tuple(FieldMeta(f, 36.0, 0.0 + d * deg) for f, d in (("c", 0), ("n1", 100), ("n3", 300)))
    return YieldPanel(fields, ("1", "2"), np.array([[1.0, 2.0], [2.0, 3.0], [1.0, 5.0]]))


def test_neighborhood_collinear_fixture():
    nb = neighborhood(_collinear_panel(), "c", radius=200, exclusion=50)
    assert nb.field_ids == ["c", "n1"]


def test_neighborhood_boundaries():
    p = _collinear_panel()
    assert neighborhood(p, "c", radius=50_000).field_ids == ["c", "n1", "n3"]
    assert neighborhood(p, "c", radius=10).field_ids == ["c"]
    assert neighborhood(p, "c", radius=200, exclusion=500).field_ids == ["c"]


def test_neighborhood_needs_coordinates():
    with pytest.raises(MetadataError):
        neighborhood(YieldPanel.from_array(np.ones((2, 2)) + np.eye(2)), "f0", 100)


@given(
    d=st.lists(st.floats(0, 1e5), min_size=2, max_size=30),
    r1=st.floats(0, 1e5),
    r2=st.floats(0, 1e5),
    e=st.floats(0, 1e3),
)
def test_neighborhood_monotone_in_radius(d, r1, r2, e):
    d = np.array(d)
    d[0] = 0.0
    lo, hi = sorted((r1, r2))
    a = neighbor_mask(d, 0, lo, e)
    b = neighbor_mask(d, 0, hi, e)
    assert a[0] and b[0]
    assert np.all(b[a])


def test_load_external_with_window(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text(
        "zone_id,period,value,subperiod\n"
        "w1,2016,1,3\nw1,2016,3,4\nw1,2016,100,9\n"
        "w1,2017,2,3\nw1,2017,4,4\n",
        encoding="utf-8",
    )
    mean = load_external(path, ["2016", "2017"], window=["3", "4"])
    assert mean["w1"].values.tolist() == [2.0, 3.0]
    total = load_external(path, ["2016", "2017"], window=["3", "4"], temporal_agg="sum")
    assert total["w1"].values.tolist() == [4.0, 6.0]


def test_load_external_plain(tmp_path):
    path = tmp_path / "x.csv"
    path.write_text("zone_id,period,value\nw1,2,5\nw1,1,4\nw2,1,1\n", encoding="utf-8")
    out = load_external(path)
    assert out["w1"].periods == ("1", "2")
    assert out["w1"].values.tolist() == [4.0, 5.0]
    assert "w2" in out
    with pytest.raises(PanelError):
        out["w1"].aligned(["1", "3"])
