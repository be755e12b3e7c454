import numpy as np
import pytest
from scipy.special import ndtr

from splinegate.augment import (AugmentedState, LogisticMixture,
                                gating_offsets, indicator_probs,
                                logistic_mixture, sample_indicators,
                                sample_utilities, utilities_from_uniforms)
from splinegate.exceptions import ConfigError
from splinegate.model import gating_prob_matrix


def mixture_cdf(x, mix):
    return ndtr(x[:, None] / mix.sds[None, :]) @ mix.weights


def logistic_cdf(x):
    return 1.0 / (1.0 + np.exp(-x))


@pytest.mark.parametrize("H,tol", [(6, 1e-3), (3, 5e-3)])
def test_mixture_cdf_accuracy(H, tol):
    mix = logistic_mixture(H)
    grid = np.linspace(-10.0, 10.0, 4001)
    err = np.max(np.abs(mixture_cdf(grid, mix) - logistic_cdf(grid)))
    assert err <= tol


@pytest.mark.parametrize("H", [3, 6])
def test_mixture_invariants(H):
    mix = logistic_mixture(H)
    assert abs(mix.weights.sum() - 1.0) < 1e-12
    assert np.all(mix.sds > 0)
    assert np.all(np.diff(mix.sds) > 0)
    var = float(mix.weights @ mix.sds**2)
    assert abs(var - np.pi**2 / 3.0) / (np.pi**2 / 3.0) < 0.05


def test_mixture_unknown_H():
    with pytest.raises(ConfigError):
        logistic_mixture(4)


def test_utility_formula_reference_points():
    assert np.isclose(utilities_from_uniforms(1.0, 1.0, 0.5), np.log(3.0))
    assert np.isclose(utilities_from_uniforms(1.0, 0.0, 0.5), -np.log(3.0))


def test_utility_sign_is_allocation():
    rng = np.random.default_rng(1)
    rho = np.exp(rng.standard_normal(2000) * 4)
    d = (rng.random(2000) < 0.5).astype(float)
    z = utilities_from_uniforms(rho, d, rng.random(2000))
    assert np.all((z > 0) == (d == 1.0))


def test_sample_utilities_sign_consistency():
    rng = np.random.default_rng(2)
    n, G = 500, 4
    eta = rng.standard_normal((n, G - 1)) * 2
    lam = np.exp(np.concatenate([eta, np.zeros((n, 1))], axis=1))
    labels = rng.integers(0, G, size=n)
    D = np.eye(G)[labels]
    z = sample_utilities(lam, D, rng)
    assert z.shape == (n, G - 1)
    assert np.all((z > 0) == (D[:, : G - 1] == 1.0))


def test_indicator_probs_zero_residual():
    mix = logistic_mixture(6)
    probs = indicator_probs(0.0, mix)
    expected = (mix.weights / mix.sds) / (mix.weights / mix.sds).sum()
    assert np.allclose(probs, expected, atol=1e-14)
    assert abs(probs.sum() - 1.0) < 1e-12


def test_indicator_single_component():
    mix = LogisticMixture(H=1, weights=np.array([1.0]), sds=np.array([1.0]))
    rng = np.random.default_rng(3)
    r = sample_indicators(np.zeros((10, 1)), np.zeros((10, 1)),
                          np.ones((10, 2)), mix, rng)
    assert np.all(r == 1)


def test_indicator_frequencies_match_formula():
    mix = logistic_mixture(6)
    rng = np.random.default_rng(4)
    eps = 10.0
    n = 100_000
    r = sample_indicators(np.full((n, 1), eps), np.zeros((n, 1)),
                          np.ones((n, 2)), mix, rng)
    probs = indicator_probs(eps, mix)
    for h in range(6):
        freq = np.mean(r == h + 1)
        se = np.sqrt(probs[h] * (1 - probs[h]) / n)
        assert abs(freq - probs[h]) <= 3 * se + 1e-12


def test_indicator_extreme_residual_is_stable():
    mix = logistic_mixture(6)
    probs = indicator_probs(np.array([500.0, -500.0, 0.0]), mix)
    assert np.all(np.isfinite(probs))
    assert np.allclose(probs.sum(axis=-1), 1.0)
    # a huge residual must load on the widest component
    assert probs[0].argmax() == 5


def test_marginalization_recovers_gating_probability():
    """Allocation then utility: the utility sign frequency must reproduce
    the gating probability itself."""
    rng = np.random.default_rng(5)
    n = 100_000
    eta = np.tile(np.array([[0.7]]), (n, 1))
    p = gating_prob_matrix(eta)
    labels = 1 + (rng.random(n)[:, None] > p.cumsum(axis=1)).sum(axis=1)
    D = np.eye(2)[labels - 1]
    lam = np.exp(np.concatenate([eta, np.zeros((n, 1))], axis=1))
    z = sample_utilities(lam, D, rng)
    freq = np.mean(z[:, 0] > 0)
    se = np.sqrt(p[0, 0] * (1 - p[0, 0]) / n)
    assert abs(freq - p[0, 0]) < 4 * se


def test_gating_offsets_match_direct_sum():
    rng = np.random.default_rng(6)
    eta = rng.standard_normal((50, 3)) * 3
    offs = gating_offsets(eta)
    lam = np.exp(np.concatenate([eta, np.zeros((50, 1))], axis=1))
    for g in range(3):
        direct = np.log(lam.sum(axis=1) - lam[:, g])
        assert np.allclose(offs[:, g], direct, atol=1e-10)


def test_augmented_state_invariants():
    rng = np.random.default_rng(7)
    n, G = 30, 3
    eta = rng.standard_normal((n, G - 1))
    lam = np.exp(np.concatenate([eta, np.zeros((n, 1))], axis=1))
    labels = rng.integers(0, G, size=n)
    D = np.eye(G)[labels]
    z = sample_utilities(lam, D, rng)
    r = sample_indicators(z, eta, lam, logistic_mixture(6), rng)
    state = AugmentedState(z=z, r=r, D=D)  # invariants hold by construction
    assert state.r.min() >= 1 and state.r.max() <= 6
    with pytest.raises(ValueError):
        AugmentedState(z=-z, r=r, D=D)
    bad = D.copy()
    bad[0] = 0.0
    with pytest.raises(ValueError):
        AugmentedState(z=z, r=r, D=bad)
