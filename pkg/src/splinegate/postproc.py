"""Posterior post-processing: label-switching resolution by k-means on the
component probability draws, MAP allocation, posterior summaries and
pointwise credible bands for the smooth gating effects."""

import copy
from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from scipy.optimize import linear_sum_assignment
from sklearn.cluster import KMeans

from .exceptions import DataError
from .metrics import aicm


@dataclass
class RelabeledDraws:
    """A DrawStore with per-iteration permutations applied.

    permutation_log row t holds the cluster indices assigned to the G
    component draws of iteration t; rows that are not permutations were left
    untouched and counted in non_permutation_count.
    """

    draws: object
    permutation_log: np.ndarray
    non_permutation_count: int


def _theta_features(store):
    """Stack every iteration's per-component probability vectors."""
    R = store.n_retained
    G = store.config.G
    return np.concatenate([a.reshape(R * G, -1) for a in store.theta], axis=1)


def relabel(store, seed=0):
    """Resolve label switching by k-means clustering of the theta draws.

    Every iteration whose G cluster assignments form a permutation is
    re-arranged through the inverse permutation; fixed-effect and spline
    coefficients are additionally re-referenced so the baseline component's
    coefficients are exactly zero. Other iterations are retained unchanged
    and counted, since dropping them would bias the log-likelihood sequence.
    """
    G = store.config.G
    R = store.n_retained
    out = copy.deepcopy(store)
    if R == 0:
        raise DataError("empty draw store")
    if G == 1:
        return RelabeledDraws(draws=out,
                              permutation_log=np.zeros((R, 1), dtype=int),
                              non_permutation_count=0)

    feats = _theta_features(store)
    labels = None
    for attempt in range(10):
        try:
            km = KMeans(n_clusters=G, n_init=25, random_state=seed + attempt)
            labels = km.fit_predict(feats)
            break
        except Exception:
            continue
    if labels is None:
        raise DataError("k-means failed to converge after 10 restarts")
    labels = labels.reshape(R, G)

    identity = np.arange(G)
    non_perm = 0
    for t in range(R):
        S = labels[t]
        if not np.array_equal(np.sort(S), identity):
            non_perm += 1
            continue
        if np.array_equal(S, identity):
            continue
        inv = np.argsort(S)
        for q in range(len(out.theta)):
            out.theta[q][t] = out.theta[q][t, inv]
        out.allocations[t] = S[out.allocations[t] - 1] + 1
        gamma_full = np.vstack([out.gamma[t], np.zeros((1, out.gamma.shape[2]))])
        gamma_full = gamma_full[inv] - gamma_full[inv[-1]]
        out.gamma[t] = gamma_full[:-1]
        if out.beta.shape[2]:
            for j in range(out.beta.shape[2]):
                beta_full = np.vstack([out.beta[t, :, j],
                                       np.zeros((1, out.beta.shape[3]))])
                beta_full = beta_full[inv] - beta_full[inv[-1]]
                out.beta[t, :, j] = beta_full[:-1]
    return RelabeledDraws(draws=out, permutation_log=labels,
                          non_permutation_count=non_perm)


def map_allocation(relabeled):
    """MAP partition: each unit goes to its most frequent component across
    retained draws, ties resolved toward the smallest index."""
    store = getattr(relabeled, "draws", relabeled)
    G = store.config.G
    counts = np.stack([(store.allocations == g + 1).sum(axis=0)
                       for g in range(G)], axis=1)
    return np.argmax(counts, axis=1) + 1


def count_nonempty(c_hat, G):
    """Number of components with at least one assigned unit."""
    c_hat = np.asarray(c_hat)
    return int(len(np.unique(c_hat[(c_hat >= 1) & (c_hat <= G)])))


def _grid_for(basis, grid_size):
    lo, hi = basis.orig_range if basis.orig_range is not None else basis.range
    return np.linspace(lo, hi, grid_size)


def _grid_design(basis, grid_raw):
    """Centered grid design: evaluating it gives the smooth effect with its
    training-sample average removed (the identifiability constraint)."""
    lo, hi = basis.orig_range if basis.orig_range is not None else basis.range
    span = hi - lo
    x01 = (np.asarray(grid_raw, dtype=float) - lo) / span if span > 0 else grid_raw
    mat, _ = basis.evaluate(x01)
    center = basis.design.mean(axis=0)
    return mat - center[None, :]


def smooth_curves(store, bases, grid_size=101):
    """Per-draw smooth-effect curves on an even grid in original units.

    Returns (grids, curves) where grids[j] is the grid of covariate j and
    curves has shape (R, G-1, n_smooth, grid_size); each curve is centered
    by its training-sample average.
    """
    R = store.n_retained
    G1 = store.gamma.shape[1]
    grids = [_grid_for(b, grid_size) for b in bases]
    curves = np.zeros((R, G1, len(bases), grid_size))
    for j, basis in enumerate(bases):
        M = _grid_design(basis, grids[j])  # (grid, m)
        for g in range(G1):
            curves[:, g, j, :] = store.beta[:, g, j, :] @ M.T
    return grids, curves


def smooth_summary(relabeled, bases, grid_size=101, percentiles=(2.5, 97.5)):
    """Pointwise mean and percentile bands of every smooth gating effect.

    Returns a table with columns (component, covariate, x, mean, p_lo, p_hi).
    """
    store = getattr(relabeled, "draws", relabeled)
    lo_p, hi_p = percentiles
    grids, curves = smooth_curves(store, bases, grid_size)
    rows = []
    for g in range(curves.shape[1]):
        for j in range(curves.shape[2]):
            c = curves[:, g, j, :]
            mean = c.mean(axis=0)
            # pure order statistics, so two draws give their min/max envelope
            lo = np.percentile(c, lo_p, axis=0, method="inverted_cdf")
            hi = np.percentile(c, hi_p, axis=0, method="inverted_cdf")
            rows.append(pd.DataFrame({
                "component": g + 1, "covariate": j + 1, "x": grids[j],
                "mean": mean, "p_lo": lo, "p_hi": hi}))
    if not rows:
        return pd.DataFrame(
            columns=["component", "covariate", "x", "mean", "p_lo", "p_hi"])
    return pd.concat(rows, ignore_index=True)


def align_to_reference(c_hat, reference, G):
    """Best one-to-one matching of fitted components to reference labels.

    Returns sigma with sigma[g-1] = reference component assigned to fitted
    component g, via the assignment that maximizes label agreement.
    """
    reference = np.asarray(reference)
    G_ref = max(G, int(reference.max()))
    conf = np.zeros((G, G_ref))
    for g in range(G):
        sel = c_hat == g + 1
        if sel.any():
            conf[g] = np.bincount(reference[sel] - 1, minlength=G_ref)
    rows, cols = linear_sum_assignment(-conf)
    sigma = np.zeros(G, dtype=int)
    sigma[rows] = cols + 1
    return sigma


def aligned_smooth_means(relabeled, bases, sigma, grid_size=101):
    """Posterior-mean smooth curves re-referenced to a reference labeling.

    sigma maps fitted components to reference components (1-based). The
    returned array has shape (G_ref-1, n_smooth, grid_size): the mean curve
    of reference component t relative to the reference baseline G_ref.
    """
    store = getattr(relabeled, "draws", relabeled)
    G = store.config.G
    grids, curves = smooth_curves(store, bases, grid_size)
    R = curves.shape[0]
    full = np.concatenate(
        [curves, np.zeros((R, 1, curves.shape[2], curves.shape[3]))], axis=1)
    G_ref = int(sigma.max())
    inv = np.zeros(G_ref, dtype=int)
    for g in range(G):
        inv[sigma[g] - 1] = g
    means = np.zeros((G_ref - 1, curves.shape[2], curves.shape[3]))
    base = full[:, inv[G_ref - 1]]
    for t in range(G_ref - 1):
        means[t] = (full[:, inv[t]] - base).mean(axis=0)
    return grids, means


@dataclass
class FitSummary:
    """Posterior means, MAP partition, occupancy and fit score of one chain."""

    gamma_mean: np.ndarray
    beta_mean: np.ndarray
    tau2_mean: np.ndarray
    theta_mean: list
    map_partition: np.ndarray
    G_tilde: int
    aicm: float
    cluster_sizes: list
    bands: pd.DataFrame
    non_permutation_count: int
    diagnostics: dict = field(default_factory=dict)

    def to_json_dict(self):
        G = len(self.cluster_sizes)
        return {
            "aicm": self.aicm,
            "G": G,
            "G_tilde": self.G_tilde,
            "cluster_sizes": self.cluster_sizes,
            "non_permutation_count": self.non_permutation_count,
            "gamma_mean": self.gamma_mean.tolist(),
            "tau2_mean": self.tau2_mean.tolist(),
            "theta_mean": [t.tolist() for t in self.theta_mean],
            "diagnostics": self.diagnostics,
        }


def summarize_fit(store, bases, percentiles=(2.5, 97.5), relabel_seed=0):
    """Relabel a chain and reduce it to a FitSummary.

    Returns (summary, relabeled) so callers can reuse the aligned draws.
    """
    rel = relabel(store, seed=relabel_seed)
    d = rel.draws
    c_hat = map_allocation(rel)
    G = store.config.G
    bands = smooth_summary(rel, bases, percentiles=percentiles) if bases else \
        pd.DataFrame(columns=["component", "covariate", "x", "mean", "p_lo", "p_hi"])
    summary = FitSummary(
        gamma_mean=d.gamma.mean(axis=0),
        beta_mean=d.beta.mean(axis=0),
        tau2_mean=d.tau2.mean(axis=0),
        theta_mean=[t.mean(axis=0) for t in d.theta],
        map_partition=c_hat,
        G_tilde=count_nonempty(c_hat, G),
        aicm=aicm(d.loglik),
        cluster_sizes=[int((c_hat == g + 1).sum()) for g in range(G)],
        bands=bands,
        non_permutation_count=rel.non_permutation_count,
        diagnostics=dict(store.diagnostics),
    )
    return summary, rel
