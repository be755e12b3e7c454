import numpy as np
import pytest
from sklearn.metrics import adjusted_rand_score

from splinegate.exceptions import DataError
from splinegate.metrics import aicm, ari, centered_rase, rase, sari


def sari_bruteforce(S1, S2):
    """Direct pair summation over all unit pairs."""
    n = S1.shape[0]
    a1 = a2 = a12 = 0.0
    tot = 0
    for i in range(n):
        for k in range(i + 1, n):
            c1 = float(S1[i] @ S1[k])
            c2 = float(S2[i] @ S2[k])
            a12 += c1 * c2
            a1 += c1
            a2 += c2
            tot += 1
    expected = a1 * a2 / tot
    maximum = 0.5 * (a1 + a2)
    return (a12 - expected) / (maximum - expected)


def test_aicm_reference_values():
    assert aicm([3.5, 3.5, 3.5]) == 7.0
    assert aicm([0.0, 2.0]) == -2.0
    assert aicm([1.0, 2.0, 3.0]) == 2.0


def test_aicm_random_sequences_match_hand_formula():
    rng = np.random.default_rng(0)
    for _ in range(100):
        x = rng.standard_normal(rng.integers(2, 40)) * 10
        by_hand = 2 * (np.mean(x) - np.sum((x - np.mean(x)) ** 2) / (len(x) - 1))
        assert abs(aicm(x) - by_hand) < 1e-12 * max(1.0, abs(by_hand))


def test_aicm_errors():
    with pytest.raises(DataError):
        aicm([1.0])
    with pytest.raises(DataError):
        aicm([1.0, np.inf])


def test_ari_reference_values():
    assert ari([1, 1, 2, 2], [1, 1, 2, 2]) == 1.0
    assert ari([1, 1, 2, 2], [2, 2, 1, 1]) == 1.0
    assert np.isclose(ari([1, 1, 2, 2], [1, 2, 1, 2]), -0.5)


def test_ari_symmetry_and_against_sklearn():
    rng = np.random.default_rng(1)
    for _ in range(50):
        n = rng.integers(3, 30)
        p1 = rng.integers(1, 4, size=n)
        p2 = rng.integers(1, 4, size=n)
        got = ari(p1, p2)
        assert abs(got - ari(p2, p1)) < 1e-14
        assert abs(got - adjusted_rand_score(p1, p2)) < 1e-12
        assert got <= 1.0 + 1e-12


def test_ari_errors():
    with pytest.raises(DataError):
        ari([1, 2], [1, 2, 3])
    with pytest.raises(DataError):
        ari([1], [1])


def _onehot(p, G):
    return np.eye(G)[np.asarray(p) - 1]


def test_sari_reduces_to_ari_on_hard_partitions():
    assert sari(_onehot([1, 1, 2, 2], 2), _onehot([1, 1, 2, 2], 2)) == 1.0
    got = sari(_onehot([1, 1, 2, 2], 2), _onehot([1, 2, 1, 2], 2))
    assert np.isclose(got, -0.5)
    rng = np.random.default_rng(2)
    for _ in range(50):
        n = rng.integers(3, 20)
        p1 = rng.integers(1, 4, size=n)
        p2 = rng.integers(1, 4, size=n)
        a = ari(p1, p2)
        s = sari(_onehot(p1, 3), _onehot(p2, 3))
        assert abs(a - s) < 1e-12


def test_sari_against_bruteforce_soft():
    rng = np.random.default_rng(3)
    for _ in range(40):
        S1 = rng.dirichlet(np.ones(2), size=6)
        S2 = rng.dirichlet(np.ones(3), size=6)
        assert abs(sari(S1, S2) - sari_bruteforce(S1, S2)) < 1e-12


def test_sari_uniform_rows_matches_bruteforce():
    S = np.full((6, 2), 0.5)
    assert abs(sari(S, S) - sari_bruteforce(S, S)) < 1e-12


def test_sari_errors():
    with pytest.raises(DataError):
        sari(np.array([[0.6, 0.6], [0.5, 0.5]]), np.full((2, 2), 0.5))
    with pytest.raises(DataError):
        sari(np.full((3, 2), 0.5), np.full((2, 2), 0.5))


def test_rase_reference_values():
    grid = np.linspace(0, 1, 101)
    curve = np.sin(grid)
    assert rase(curve, curve) == 0.0
    assert np.isclose(rase(curve + 0.3, curve), 0.3)
    assert np.isclose(rase(curve - 1.2, curve), 1.2)


def test_rase_triangle_inequality():
    rng = np.random.default_rng(4)
    for _ in range(30):
        a, b, c = rng.standard_normal((3, 50))
        assert rase(a, c) <= rase(a, b) + rase(b, c) + 1e-12


def test_rase_errors_and_centered():
    with pytest.raises(DataError):
        rase(np.zeros(5), np.zeros(6))
    grid = np.linspace(0, 1, 11)
    assert np.isclose(centered_rase(grid + 5.0, grid), 0.0)
