import numpy as np
import pytest

from basisrisk import optimal_share
from basisrisk.evaluation import equicorrelated_panel, generate_one_factor


def test_returns_truth_and_shapes():
    p, truth = generate_one_factor(7, 5, rng_seed=3)
    assert (p.n, p.t) == (7, 5)
    expect = truth.intercepts[:, None] + truth.loadings[:, None] * truth.factor[None, :]
    assert np.all(np.abs(p.values - expect) < 10)


def test_noise_free_equal_loadings():
    p, _ = generate_one_factor(5, 6, loading_dist=1.0, noise_sd_dist=0.0)
    assert np.allclose(np.corrcoef(p.values), 1.0)
    assert optimal_share(p) == pytest.approx(1.0)


def test_zero_loadings_share_tends_to_one_over_n():
    p, _ = generate_one_factor(5, 20_000, loading_dist=0.0, noise_sd_dist=1.0, rng_seed=1)
    assert optimal_share(p) == pytest.approx(0.2, abs=0.02)


def test_population_share_recovered():
    p, truth = generate_one_factor(200, 500, loading_dist=(0.5, 1.5), noise_sd_dist=1.0, rng_seed=11, intercept=50.0)
    assert optimal_share(p) == pytest.approx(truth.optimal_share("corr"), abs=0.02)


def test_callable_distributions():
    p, truth = generate_one_factor(4, 3, loading_dist=lambda r, n: np.arange(n, dtype=float), rng_seed=0)
    assert truth.loadings.tolist() == [0.0, 1.0, 2.0, 3.0]


def test_invalid_arguments():
    with pytest.raises(ValueError):
        generate_one_factor(3, 1)
    with pytest.raises(ValueError):
        generate_one_factor(3, 4, noise_sd_dist=-1.0)
    with pytest.raises(ValueError):
        equicorrelated_panel(3, -0.9)


def test_equicorrelated_exact():
    p = equicorrelated_panel(6, 0.4, rng_seed=2)
    c = np.corrcoef(p.values)
    assert np.allclose(c[~np.eye(6, dtype=bool)], 0.4, atol=1e-12)
    assert (p.values > 0).all()
