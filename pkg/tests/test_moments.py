import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from basisrisk import YieldPanel, compute_moments, eigen_share, panel_top_eigen, top_eigen
from basisrisk.moments import DegenerateError, InsufficientDataError, normalize_sign

from conftest import random_panel


def _cubic_top_root(m):
    """Largest root of det(m - λI) = 0 via the characteristic polynomial."""
    c2 = -np.trace(m)
    c1 = 0.5 * (np.trace(m) ** 2 - np.trace(m @ m))
    c0 = -np.linalg.det(m)
    return max(np.roots([1.0, c2, c1, c0]).real)


def test_moments_match_numpy(small_panel):
    mom = compute_moments(small_panel)
    assert np.allclose(mom.sigma, np.cov(small_panel.values))
    assert np.allclose(mom.corr, np.corrcoef(small_panel.values))
    biased = compute_moments(small_panel, "T")
    assert np.allclose(biased.sigma, np.cov(small_panel.values, ddof=0))
    assert np.allclose(biased.corr, mom.corr)


def test_moments_need_two_periods():
    with pytest.raises(InsufficientDataError):
        compute_moments(np.ones((3, 1)))


def test_degenerate_field_flagged():
    v = np.array([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0], [2.0, 1.0, 4.0]])
    mom = compute_moments(v)
    assert mom.degenerate.tolist() == [False, True, False]
    assert np.all(mom.corr[1] == 0)
    eig = panel_top_eigen(v, "corr")
    assert eig.first_eigenvector[1] == 0
    assert eig.top_share == pytest.approx(top_eigen(np.corrcoef(v[[0, 2]])).top_share)


def test_all_degenerate_raises():
    with pytest.raises(DegenerateError):
        panel_top_eigen(np.full((3, 4), 2.0))


def test_top_eigen_3x3_characteristic_polynomial(rng):
    for _ in range(10):
        p = random_panel(rng, 3, 6)
        c = np.corrcoef(p.values)
        lam = _cubic_top_root(c)
        eig = top_eigen(c)
        assert eig.eigenvalues[0] == pytest.approx(lam, abs=1e-10)
        assert eig.top_share == pytest.approx(lam / 3.0, abs=1e-10)


def test_eigenvector_satisfies_definition(rng):
    p = random_panel(rng, 6, 10)
    eig = top_eigen(p, "cov")
    s = np.cov(p.values)
    v = eig.first_eigenvector
    assert np.allclose(s @ v, eig.eigenvalues[0] * v, atol=1e-10)
    assert np.linalg.norm(v) == pytest.approx(1.0)


@pytest.mark.parametrize("kind", ["corr", "cov"])
def test_gram_path_matches_direct(rng, kind):
    p = random_panel(rng, 60, 5)
    gram = panel_top_eigen(p, kind)
    assert gram.method == "gram"
    m = np.corrcoef(p.values) if kind == "corr" else np.cov(p.values)
    direct = top_eigen(m)
    assert gram.top_share == pytest.approx(direct.top_share, abs=1e-12)
    assert np.allclose(gram.first_eigenvector, direct.first_eigenvector, atol=1e-10)
    assert np.allclose(gram.eigenvalues, direct.eigenvalues[:5], atol=1e-10)


def test_share_scale_invariant(rng):
    p = random_panel(rng, 8, 6)
    a = eigen_share(p, "corr")
    b = eigen_share(p.values * np.arange(1, 9)[:, None], "corr")
    assert a == pytest.approx(b, abs=1e-12)


@given(arrays(np.float64, st.integers(1, 12), elements=st.floats(-10, 10)))
def test_normalize_sign(v):
    out = normalize_sign(v)
    assert np.array_equal(np.abs(out), np.abs(v))
    assert normalize_sign(out).tolist() == out.tolist()
    assert normalize_sign(-v).tolist() == out.tolist() or np.allclose(v.sum(), 0)


@given(
    n=st.integers(2, 7),
    t=st.integers(3, 9),
    seed=st.integers(0, 2**32 - 1),
)
def test_share_bounds(n, t, seed):
    rng = np.random.default_rng(seed)
    p = random_panel(rng, n, t)
    for kind in ("corr", "cov"):
        s = eigen_share(p, kind)
        assert 1.0 / n - 1e-12 <= s <= 1.0 + 1e-12


def test_lanczos_path_for_large_explicit_matrix(rng):
    p = random_panel(rng, 2100, 4)
    c = np.corrcoef(p.values)
    eig = top_eigen(c)
    assert eig.method == "lanczos"
    assert eig.top_share == pytest.approx(panel_top_eigen(p, "corr").top_share, abs=1e-9)


def test_top_eigen_rejects_asymmetric():
    with pytest.raises(ValueError):
        top_eigen(np.array([[1.0, 0.5], [0.1, 1.0]]))
