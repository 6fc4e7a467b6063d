import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.optimize import brentq

from basisrisk import YieldPanel, field_r2
from basisrisk.evaluation import (
    build_scheme,
    certainty_equivalent,
    crra_utility,
    evaluate_eu,
    farm_equivalent_coverage,
    generate_one_factor,
)
from basisrisk.evaluation.utility import _individual_post


def ce_root(y, theta):
    target = np.mean(crra_utility(y, theta))
    return brentq(lambda c: crra_utility(c, theta) - target, 1e-9, y.max() * 2, xtol=1e-14, rtol=1e-15)


def coverage_grid_oracle(y, scheme, theta, step=1e-4):
    target = certainty_equivalent(y + scheme.net_transfer, theta)
    levels = np.arange(0.0, 1.5 + step / 2, step)
    ces = np.array([certainty_equivalent(row, theta) for row in _individual_post(y, levels)])
    below = np.flatnonzero(ces <= target)
    return levels[below[-1]] if len(below) else 0.0


def test_scheme_hand_computed():
    s = build_scheme([10, 10, 10, 6], 0.9)
    assert s.indemnities.tolist() == pytest.approx([0, 0, 0, 2.1])
    assert s.premium == pytest.approx(0.525)


def test_scheme_constant_never_pays():
    s = build_scheme([5.0] * 4, 0.9)
    assert s.never_pays and s.premium == 0


def test_scheme_full_trigger_decreasing():
    s = build_scheme([5.0, 4.0, 3.0, 2.0], 1.0)
    assert (s.indemnities[2:] > 0).all() and (s.indemnities[:2] == 0).all()


@given(st.lists(st.floats(0.1, 100), min_size=2, max_size=20), st.floats(0.05, 1.0))
def test_fair_premium_mean_neutral(zm, lam):
    s = build_scheme(zm, lam)
    assert s.premium == np.mean(s.indemnities)
    assert np.mean(s.net_transfer) == pytest.approx(0.0, abs=1e-12 * max(zm))
    assert (s.indemnities >= 0).all()


@pytest.mark.parametrize("theta", [0.5, 1.0, 1.5, 3.0])
def test_ce_matches_root_find(theta):
    y = np.array([1.0, 2.0, 3.0, 4.0])
    assert certainty_equivalent(y, theta) == pytest.approx(ce_root(y, theta), abs=1e-8)


def test_ce_spec_example_value():
    y = np.array([1.0, 2.0, 3.0, 4.0])
    direct = (np.mean(y**-0.5)) ** -2
    assert certainty_equivalent(y, 1.5) == pytest.approx(direct, rel=1e-14)


@given(st.lists(st.floats(0.5, 50), min_size=2, max_size=12), st.floats(0.1, 4))
def test_jensen(y, theta):
    y = np.array(y)
    assert certainty_equivalent(y, theta) <= y.mean() * (1 + 1e-12)


def test_ce_constant():
    assert certainty_equivalent([3.0] * 5, 1.5) == pytest.approx(3.0)


def test_eu_never_pays_equal_ce():
    p = YieldPanel.from_array([[5.0, 6.0, 5.5, 6.5], [5.0, 5.5, 6.0, 6.0]])
    ev = evaluate_eu(p, build_scheme([10.0, 10.0, 10.0, 10.0]))
    assert np.allclose(ev.ce_insured, ev.ce_uninsured)


def test_eu_excludes_nonpositive():
    p = YieldPanel.from_array([[0.0, 4.0, 5.0, 6.0], [3.0, 4.0, 5.0, 6.0]])
    ev = evaluate_eu(p)
    assert ev.excluded == ("f0",)
    assert np.isnan(ev.ce_insured[0]) and not np.isnan(ev.ce_insured[1])


def test_coverage_field_equals_zone_mean():
    y = np.array([10.0, 12.0, 7.0, 11.0, 9.0])
    s = build_scheme(y, 0.9)
    res = farm_equivalent_coverage(y, s, 1.5)
    assert res.level == pytest.approx(0.9, abs=1e-6)
    assert res.saturated is None


def test_coverage_lower_saturation():
    y = np.array([10.0, 12.0, 7.0, 11.0])
    s = build_scheme([5.0, 5.0, 5.0, 5.0], 0.9)
    res = farm_equivalent_coverage(y, s)
    assert res.level == 0.0 and res.saturated == "lower"


@pytest.mark.parametrize("seed", range(6))
def test_coverage_grid_oracle(seed):
    panel, truth = generate_one_factor(30, 30, loading_dist=1.0, noise_sd_dist=0.4, rng_seed=seed, intercept=8.0)
    zm = panel.values.mean(axis=0)
    s = build_scheme(zm, 0.9)
    r2 = field_r2(panel.values, zm)
    i = int(np.argmax(r2))
    y = panel.values[i]
    res = farm_equivalent_coverage(y, s, 1.5)
    oracle = coverage_grid_oracle(y, s, 1.5)
    assert abs(res.level - oracle) <= 1e-3
    assert res.level == pytest.approx(0.9, abs=0.15)


def test_risk_reduction_direction():
    hits, total = 0, 0
    for seed in range(20):
        panel, _ = generate_one_factor(20, 30, loading_dist=(0.8, 1.2), noise_sd_dist=0.3, rng_seed=seed, intercept=8)
        zm = panel.values.mean(axis=0)
        r2 = field_r2(panel.values, zm)
        ev = evaluate_eu(panel, coverage=False)
        sel = r2 > 0.5
        hits += int(np.sum(ev.ce_insured[sel] >= ev.ce_uninsured[sel]))
        total += int(sel.sum())
    assert total > 0 and hits / total >= 0.95
