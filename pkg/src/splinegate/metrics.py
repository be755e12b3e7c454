"""Model-selection and clustering-quality metrics: the Monte Carlo AIC of a
log-likelihood sequence, hard and soft adjusted Rand indices, and the root
average squared error between smooth curves."""

import numpy as np

from .exceptions import DataError


def aicm(loglik):
    """Monte Carlo AIC: 2 * (mean - sample variance) of the retained
    log-likelihood sequence, variance with the (count - 1) denominator."""
    x = np.asarray(loglik, dtype=float)
    if x.size < 2:
        raise DataError("need at least two log-likelihood values")
    if not np.all(np.isfinite(x)):
        raise DataError("log-likelihood sequence contains non-finite values")
    return float(2.0 * (x.mean() - x.var(ddof=1)))


def _pair_terms_hard(p1, p2):
    """Same-pair counts of two hard partitions via the contingency table."""
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    _, i1 = np.unique(p1, return_inverse=True)
    _, i2 = np.unique(p2, return_inverse=True)
    k1, k2 = i1.max() + 1, i2.max() + 1
    cont = np.bincount(i1 * k2 + i2, minlength=k1 * k2).reshape(k1, k2)
    n = p1.size
    same_both = (cont * (cont - 1)).sum() / 2.0
    row = cont.sum(axis=1)
    col = cont.sum(axis=0)
    same_1 = (row * (row - 1)).sum() / 2.0
    same_2 = (col * (col - 1)).sum() / 2.0
    return same_both, same_1, same_2, n * (n - 1) / 2.0


def _adjusted_index(same_both, same_1, same_2, total):
    expected = same_1 * same_2 / total
    maximum = 0.5 * (same_1 + same_2)
    if maximum == expected:
        return 1.0  # degenerate agreement (e.g. both partitions trivial)
    return float((same_both - expected) / (maximum - expected))


def ari(p1, p2):
    """Hubert-Arabie adjusted Rand index of two hard partitions."""
    p1 = np.asarray(p1)
    p2 = np.asarray(p2)
    if p1.shape != p2.shape or p1.ndim != 1:
        raise DataError("partitions must be 1-d and of equal length")
    if p1.size < 2:
        raise DataError("need at least two units")
    return _adjusted_index(*_pair_terms_hard(p1, p2))


def _check_soft(S):
    S = np.asarray(S, dtype=float)
    if S.ndim != 2:
        raise DataError("soft allocation must be an (n, G) matrix")
    if S.min() < -1e-12 or np.abs(S.sum(axis=1) - 1.0).max() > 1e-9:
        raise DataError("soft allocation rows must lie on the simplex")
    return S


def sari(S1, S2):
    """Soft adjusted Rand index of two allocation-probability matrices.

    Pairwise same-cluster indicators are replaced by expected co-membership
    products; with one-hot inputs this reduces exactly to `ari`.
    """
    S1 = _check_soft(S1)
    S2 = _check_soft(S2)
    n = S1.shape[0]
    if S2.shape[0] != n:
        raise DataError("soft allocations must cover the same units")
    if n < 2:
        raise DataError("need at least two units")
    M = S1.T @ S2
    diag_both = ((S1**2).sum(axis=1) * (S2**2).sum(axis=1)).sum()
    same_both = 0.5 * ((M**2).sum() - diag_both)
    r1 = S1.sum(axis=0)
    r2 = S2.sum(axis=0)
    same_1 = 0.5 * ((r1**2).sum() - (S1**2).sum())
    same_2 = 0.5 * ((r2**2).sum() - (S2**2).sum())
    return _adjusted_index(same_both, same_1, same_2, n * (n - 1) / 2.0)


def rase(estimated, truth):
    """Root average squared error between two curves on the same even grid."""
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    if est.shape != tru.shape:
        raise DataError("curves must share the evaluation grid")
    return float(np.sqrt(np.mean((est - tru) ** 2)))


def centered_rase(estimated, truth):
    """RASE after removing each curve's grid average.

    The gating model identifies smooth effects only up to additive shifts,
    so the headline simulation score compares centered shapes.
    """
    est = np.asarray(estimated, dtype=float)
    tru = np.asarray(truth, dtype=float)
    return rase(est - est.mean(), tru - tru.mean())
