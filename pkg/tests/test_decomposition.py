import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from basisrisk import (
    IndexWeights,
    YieldPanel,
    beta_vector,
    compute_moments,
    decompose,
    field_r2,
    optimal_share,
    optimal_weights_avg,
    optimal_weights_total,
    r2_bar,
    r2_diag,
    r2_matrix,
    r2_total,
    regress_fields,
)
from basisrisk.decomposition import DegenerateIndexError, total_ssr
from basisrisk.evaluation import equicorrelated_panel

from conftest import random_panel


def _ols_r2(y, f):
    """Regression R² via lstsq, independent of the library's closed forms."""
    x = np.column_stack([np.ones_like(f), f])
    coef, *_ = np.linalg.lstsq(x, y, rcond=None)
    resid = y - x @ coef
    return 1.0 - resid @ resid / np.sum((y - y.mean()) ** 2), coef


def test_field_r2_matches_lstsq(rng):
    p = random_panel(rng, 5, 7)
    f = rng.normal(size=7)
    expect = [_ols_r2(y, f)[0] for y in p.values]
    assert np.allclose(field_r2(p.values, f), expect, atol=1e-12)


def test_regress_fields_coefficients(rng):
    p = random_panel(rng, 4, 6)
    f = p.values.mean(axis=0)
    for reg, y in zip(regress_fields(p, f), p.values):
        r2, (a, b) = _ols_r2(y, f)
        assert (reg.alpha, reg.beta, reg.r2) == pytest.approx((a, b, r2), abs=1e-10)
        assert reg.resid_sd == pytest.approx(np.sqrt(reg.ssr / 4))


def test_beta_vector_matches_ols(rng):
    p = random_panel(rng, 6, 5)
    mom = compute_moments(p)
    slopes = [_ols_r2(y, p.values.mean(axis=0))[1][1] for y in p.values]
    assert np.allclose(beta_vector(mom), slopes, atol=1e-10)
    assert beta_vector(mom).mean() == pytest.approx(1.0)


def test_r2_matrix_diagonal(rng):
    p = random_panel(rng, 5, 8)
    mom = compute_moments(p)
    w = IndexWeights(rng.normal(size=5))
    f = w.index(p)
    reg = [_ols_r2(y, f)[0] for y in p.values]
    assert np.allclose(np.diag(r2_matrix(mom, w)), reg, atol=1e-10)
    assert np.allclose(r2_diag(mom, w), reg, atol=1e-10)


def test_degenerate_index_raises(small_panel):
    with pytest.raises(DegenerateIndexError):
        field_r2(small_panel.values, np.ones(4))


def test_weighted_average_relation(rng):
    p = random_panel(rng, 5, 6)
    f = rng.normal(size=6)
    sst = np.sum((p.values - p.values.mean(axis=1, keepdims=True)) ** 2, axis=1)
    assert r2_total(p, f) == pytest.approx(1 - total_ssr(p.values, f) / sst.sum(), abs=1e-12)


@pytest.mark.parametrize("rho", [0.0, 0.3, 0.5, 0.9])
@pytest.mark.parametrize("n", [2, 3, 10])
def test_equicorrelated_closed_form(rho, n):
    p = equicorrelated_panel(n, rho)
    assert np.allclose(np.corrcoef(p.values), (1 - rho) * np.eye(n) + rho, atol=1e-12)
    assert optimal_share(p) == pytest.approx((1 + (n - 1) * rho) / n, abs=1e-9)


@pytest.mark.parametrize("metric", ["avg", "total"])
def test_optimal_weights_attain_share(rng, metric):
    p = random_panel(rng, 7, 5)
    w = optimal_weights_avg(p) if metric == "avg" else optimal_weights_total(p)
    f = w.index(p)
    score = r2_bar(p, f) if metric == "avg" else r2_total(p, f)
    assert score == pytest.approx(optimal_share(p, metric), abs=1e-10)
    # moment-based and panel-based weights agree up to scale
    mom = compute_moments(p)
    w2 = optimal_weights_avg(mom) if metric == "avg" else optimal_weights_total(mom)
    assert np.allclose(w2.weights / np.linalg.norm(w2.weights), w.weights / np.linalg.norm(w.weights), atol=1e-10)


def test_optimal_beats_random_weights(rng):
    p = random_panel(rng, 5, 4)
    bound = optimal_share(p)
    w = rng.normal(size=(20000, 5))
    f = w @ p.values
    xc = p.values - p.values.mean(axis=1, keepdims=True)
    fc = f - f.mean(axis=1, keepdims=True)
    r2 = (fc @ xc.T) ** 2 / (np.sum(fc**2, axis=1)[:, None] * np.sum(xc**2, axis=1)[None, :])
    assert r2.mean(axis=1).max() <= bound + 1e-9


@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 8), t=st.integers(3, 8))
def test_decomposition_identity(seed, n, t):
    rng = np.random.default_rng(seed)
    p = random_panel(rng, n, t)
    f = rng.normal(size=t)
    for metric in ("avg", "total"):
        d = decompose(p, f, metric)
        assert d.zonal_risk + d.design_risk == d.total_risk
        assert d.design_risk >= -1e-9
        assert d.total_risk == pytest.approx(1 - d.r2_bar, abs=1e-12)


def test_first_pc_has_no_design_risk_total(rng):
    p = random_panel(rng, 9, 5)
    w = optimal_weights_total(p)
    d = decompose(p, w, "total")
    assert abs(d.design_risk) < 1e-10
    assert d.index_kind == "optimal_total"


def test_index_weights_validation():
    with pytest.raises(ValueError):
        IndexWeights([1.0, np.inf])
    with pytest.raises(ValueError):
        IndexWeights([1.0], kind="bogus")
    assert IndexWeights([1.0, 3.0]).sum_to_one.tolist() == [0.25, 0.75]


def test_decompose_accepts_index_series(small_panel):
    from basisrisk import zone_mean_index

    d = decompose(small_panel, zone_mean_index(small_panel))
    assert d.index_kind == "zone_mean"
    assert d.r2_bar == pytest.approx(r2_bar(small_panel, small_panel.values.mean(axis=0)))


def test_degenerate_fields_excluded_from_average():
    v = np.array([[1.0, 2.0, 3.0, 4.0], [7.0, 7.0, 7.0, 7.0], [2.0, 4.0, 6.0, 9.0]])
    p = YieldPanel.from_array(v)
    d = decompose(p, v[0])
    assert d.n_degenerate == 1
    assert np.isnan(d.per_field_r2[1])
    assert d.r2_bar == pytest.approx(np.mean(field_r2(v[[0, 2]], v[0])))
