"""Gibbs sampler for the spline-gated mixture model.

One sweep cycles, for each non-baseline component, through a fresh draw of
the latent utilities and mixture indicators followed by the conjugate updates
of that component's spline blocks, fixed effects and smoothing variances;
component probabilities and allocations close the loop. Auxiliary variables
are always consumed immediately after they are drawn, with gating predictors
refreshed block by block, so every update conditions on the most recent state.
"""

import json
import time
from dataclasses import dataclass, field, asdict

import numpy as np
import pandas as pd
from scipy.linalg import cho_solve, solve_triangular

from . import __version__
from .augment import indicator_probs, logistic_mixture, utilities_from_uniforms
from .basis import build_bspline_basis, build_penalty
from .exceptions import (ConfigError, DataError, DegenerateConstraintError,
                         NumericalError)
from .model import PriorConfig, loglik_matrix

_ETA_CLIP = 700.0  # |log odds| beyond this saturates exp() anyway


@dataclass(frozen=True)
class ChainConfig:
    """Length, thinning and prior settings of one chain."""

    G: int
    T: int
    T0: int
    seed: int
    thin: int = 1
    prior: PriorConfig = field(default_factory=PriorConfig)

    def __post_init__(self):
        if self.G < 1:
            raise ConfigError(f"G must be >= 1, got {self.G}")
        if not (0 <= self.T0 < self.T):
            raise ConfigError(f"need 0 <= T0 < T, got T0={self.T0}, T={self.T}")
        if self.thin < 1:
            raise ConfigError("thin must be >= 1")

    @property
    def retained(self):
        return (self.T - self.T0) // self.thin


@dataclass
class DrawStore:
    """Retained parameter trajectories of one chain.

    theta is a list over manifest variables of (R, G, C_q) arrays; gamma,
    beta and tau2 follow the component-major layouts of GatingParams.
    allocations holds 1-based component labels per retained iteration.
    """

    gamma: np.ndarray        # (R, G-1, p)
    beta: np.ndarray         # (R, G-1, n_smooth, m)
    tau2: np.ndarray         # (R, G-1, n_smooth)
    theta: list              # per q: (R, G, C_q)
    allocations: np.ndarray  # (R, n) int
    loglik: np.ndarray       # (R,)
    config: ChainConfig
    dataset_digest: str
    diagnostics: dict = field(default_factory=dict)

    @property
    def n_retained(self):
        return self.loglik.shape[0]

    def soft_allocation(self):
        """Posterior allocation frequencies, an (n, G) matrix."""
        R, n = self.allocations.shape
        G = self.config.G
        out = np.zeros((n, G))
        for g in range(G):
            out[:, g] = (self.allocations == g + 1).sum(axis=0)
        return out / R


class FitContext:
    """Precomputed quantities shared by every sweep of one fit."""

    def __init__(self, data, prior, G, validate=False):
        self.prior = prior
        self.G = G
        self.variant = prior.variant
        self.validate = validate
        self.mix = logistic_mixture(prior.H)
        self.responses = np.asarray(data.responses, dtype=np.int64)
        self.C = tuple(data.C)
        self.n = data.n
        self.Q = data.Q
        self.data = data

        if self.variant == "parametric":
            self.X = np.concatenate([data.X_linear, data.X_smooth], axis=1)
        elif self.variant == "blca":
            self.X = data.X_linear[:, :1]
        else:
            self.X = np.asarray(data.X_linear, dtype=float)
        self.p = self.X.shape[1]

        self.bases = []
        if self.variant == "semiparametric":
            for j in range(data.n_smooth):
                col = data.X_smooth[:, j]
                lo, hi = float(col.min()), float(col.max())
                if hi <= lo:
                    raise DataError(
                        f"smooth covariate {j} is constant; cannot place knots")
                scaled = (col - lo) / (hi - lo)
                self.bases.append(build_bspline_basis(
                    scaled, prior.m, knot_range=(0.0, 1.0),
                    covariate_index=j, orig_range=(lo, hi)))
        self.n_smooth = len(self.bases)
        self.penalty = build_penalty(prior.m).matrix if self.n_smooth else None
        self.B = [b.design for b in self.bases]
        self.B1 = [b.design.sum(axis=0) for b in self.bases]


class SamplerState:
    """Mutable per-iteration state of one chain."""

    def __init__(self, ctx, rng):
        G, n = ctx.G, ctx.n
        G1 = max(G - 1, 0)
        self.gamma = np.zeros((G1, ctx.p))
        self.beta = np.zeros((G1, ctx.n_smooth, ctx.prior.m))
        self.tau2 = np.full((G1, ctx.n_smooth), 0.1)
        self.theta = [rng.dirichlet(np.full(c, ctx.prior.delta), size=G)
                      for c in ctx.C]
        self.labels = rng.integers(1, G + 1, size=n)
        self.eta = np.zeros((n, G1))
        self.smooth_part = np.zeros((G1, ctx.n_smooth, n))
        self.z = np.zeros((n, G1))
        self.r = np.ones((n, G1), dtype=np.int64)
        self.loglik = np.nan
        self.floored = 0
        self.ridge_events = 0
        self.uniform_resamples = 0

    def refresh_eta(self, ctx):
        """Recompute cached predictors from the current coefficients."""
        self.eta = self.X_part(ctx) + self.smooth_part.sum(axis=1).T

    def X_part(self, ctx):
        return ctx.X @ self.gamma.T


def init_state(ctx, rng):
    """Diffuse, variant-independent initial state: uniform allocations,
    prior component probabilities, zero coefficients, tau2 = 0.1."""
    return SamplerState(ctx, rng)


def draw_gaussian_by_precision(P, b, rng, state=None):
    """Draw from N(P^-1 b, P^-1); one ridge retry on Cholesky failure.

    Returns (draw, mean, chol_lower).
    """
    try:
        L = np.linalg.cholesky(P)
    except np.linalg.LinAlgError:
        ridge = 1e-8 * np.trace(P) / P.shape[0]
        if state is not None:
            state.ridge_events += 1
        try:
            L = np.linalg.cholesky(P + ridge * np.eye(P.shape[0]))
        except np.linalg.LinAlgError as err:
            raise NumericalError(
                f"precision matrix not positive definite even after ridge "
                f"{ridge:.3e} (trace {np.trace(P):.3e})") from err
    mean = cho_solve((L, True), b)
    noise = solve_triangular(L, rng.standard_normal(P.shape[0]),
                             lower=True, trans="T")
    return mean + noise, mean, L


def spline_full_conditional(B, K, tau2, var, resp):
    """Precision and linear term of one spline block's Gaussian conditional.

    var holds the per-unit mixture variances; resp the working response
    (utility plus offset minus the rest of the predictor).
    """
    w = 1.0 / var
    P = (B.T * w) @ B + K / tau2
    return P, B.T @ (resp * w)


def fixed_full_conditional(X, v, var, resp):
    """Precision and linear term for the fixed gating effects."""
    w = 1.0 / var
    P = (X.T * w) @ X + np.eye(X.shape[1]) / v
    return P, X.T @ (resp * w)


def smoothing_posterior(beta_centered, a, b):
    """Inverse-gamma (shape, rate) of a smoothing variance given centered
    coefficients; the quadratic form of the walk penalty is the sum of
    squared first differences."""
    quad = float(np.sum(np.diff(beta_centered) ** 2))
    return a + (len(beta_centered) - 1) / 2.0, b + 0.5 * max(quad, 0.0)


def _component_offset(eta, g):
    """log sum over the other components' intensities, baseline included."""
    n, G1 = eta.shape
    logits = np.concatenate([eta[:, :g], eta[:, g + 1:],
                             np.zeros((n, 1))], axis=1)
    mx = logits.max(axis=1)
    return mx + np.log(np.exp(logits - mx[:, None]).sum(axis=1))


def sample_spline_coeffs(state, ctx, g, j, var, resp, rng):
    """Steps for one spline block: conjugate Gaussian draw then zero-sum
    centering through the same precision factor."""
    B, B1 = ctx.B[j], ctx.B1[j]
    P, b = spline_full_conditional(B, ctx.penalty, state.tau2[g, j], var, resp)
    draw, _, L = draw_gaussian_by_precision(P, b, rng, state)
    u = cho_solve((L, True), B1)
    denom = float(B1 @ u)
    if denom <= 0.0 or not np.isfinite(denom):
        raise DegenerateConstraintError(
            f"zero-sum constraint degenerate for component {g}, covariate {j}")
    return draw - u * (float(B1 @ draw) / denom)


def sample_fixed_effects(state, ctx, g, var, resp, rng):
    """Conjugate Gaussian draw of one component's fixed gating effects."""
    P, b = fixed_full_conditional(ctx.X, ctx.prior.v, var, resp)
    draw, _, _ = draw_gaussian_by_precision(P, b, rng, state)
    return draw


def sample_smoothing_variances(beta_centered, prior, rng):
    """Inverse-gamma draw of one smoothing variance."""
    shape, rate = smoothing_posterior(beta_centered, prior.a, prior.b)
    return 1.0 / rng.gamma(shape, 1.0 / rate)


def sample_component_probs(labels, ctx, rng):
    """Dirichlet draws of every component's category probabilities."""
    theta = []
    for q in range(ctx.Q):
        Cq = ctx.C[q]
        idx = (labels - 1) * Cq + (ctx.responses[:, q] - 1)
        counts = np.bincount(idx, minlength=ctx.G * Cq).reshape(ctx.G, Cq)
        alpha = ctx.prior.delta + counts
        draw = rng.standard_gamma(alpha)
        theta.append(draw / draw.sum(axis=1, keepdims=True))
    return theta


def allocation_logprobs(eta, loglik):
    """Unnormalized log allocation probabilities: gating logits plus
    component log-likelihoods (the gating normalizer cancels)."""
    n = loglik.shape[0]
    logits = np.concatenate([eta, np.zeros((n, 1))], axis=1)
    return logits + loglik


def sample_allocations(state, ctx, rng):
    """Categorical draw of the allocation of every unit."""
    ll, floored = loglik_matrix(ctx.responses, state.theta)
    state.floored += floored
    logp = allocation_logprobs(state.eta, ll)
    logp -= logp.max(axis=1, keepdims=True)
    w = np.exp(logp)
    tot = w.sum(axis=1)
    dead = ~np.isfinite(tot) | (tot <= 0.0)
    if dead.any():
        state.uniform_resamples += int(dead.sum())
        w[dead] = 1.0
        tot[dead] = ctx.G
    cum = np.cumsum(w, axis=1) / tot[:, None]
    u = rng.random(ctx.n)
    state.labels = 1 + (u[:, None] > cum).sum(axis=1)
    state.loglik = float(ll[np.arange(ctx.n), state.labels - 1].sum())


def _gating_block(state, ctx, g, rng):
    """Fresh utilities and indicators for component g, then its conjugate
    coefficient updates, all against the current offsets."""
    offs = _component_offset(state.eta, g)
    rho = np.exp(np.clip(state.eta[:, g] - offs, -_ETA_CLIP, _ETA_CLIP))
    d = (state.labels == g + 1).astype(float)
    z = utilities_from_uniforms(rho, d, rng.random(ctx.n))
    if ctx.validate:
        assert np.all((z > 0) == (d == 1.0)), "utility sign inconsistency"
    eps = z - state.eta[:, g] + offs
    probs = indicator_probs(eps, ctx.mix)
    u = rng.random(ctx.n)
    r = 1 + (u[:, None] > probs.cumsum(axis=1)).sum(axis=1)
    state.z[:, g] = z
    state.r[:, g] = r
    var = ctx.mix.variances[r - 1]
    base = z + offs

    if ctx.variant == "semiparametric":
        for j in range(ctx.n_smooth):
            resp = base - state.eta[:, g] + state.smooth_part[g, j]
            beta = sample_spline_coeffs(state, ctx, g, j, var, resp, rng)
            new_part = ctx.B[j] @ beta
            state.eta[:, g] += new_part - state.smooth_part[g, j]
            state.smooth_part[g, j] = new_part
            state.beta[g, j] = beta

    x_part = ctx.X @ state.gamma[g]
    resp = base - state.eta[:, g] + x_part
    gamma = sample_fixed_effects(state, ctx, g, var, resp, rng)
    state.eta[:, g] += ctx.X @ gamma - x_part
    state.gamma[g] = gamma

    for j in range(ctx.n_smooth):
        state.tau2[g, j] = sample_smoothing_variances(
            state.beta[g, j], ctx.prior, rng)


def _blca_weights(state, ctx, rng):
    """Covariate-free gating: conjugate Dirichlet weights expressed as
    baseline-referenced intercepts."""
    counts = np.bincount(state.labels - 1, minlength=ctx.G)
    w = rng.dirichlet(1.0 + counts)
    w = np.maximum(w, 1e-300)
    state.gamma[:, 0] = np.log(w[:-1]) - np.log(w[-1])
    state.eta = np.tile(state.gamma[:, 0], (ctx.n, 1))


def gibbs_sweep(state, ctx, rng):
    """One full sampler iteration over all blocks."""
    if ctx.G > 1:
        if ctx.variant == "blca":
            _blca_weights(state, ctx, rng)
        else:
            for g in range(ctx.G - 1):
                _gating_block(state, ctx, g, rng)
    state.theta = sample_component_probs(state.labels, ctx, rng)
    sample_allocations(state, ctx, rng)


def validate_state(state, ctx):
    """Invariant checks used in debug runs and tests.

    Utility signs are checked inside the gating block, against the
    allocations the utilities were drawn under.
    """
    for q, th in enumerate(state.theta):
        assert np.all(th > 0) and np.allclose(th.sum(axis=1), 1.0, atol=1e-12), \
            f"theta[{q}] left the simplex"
    assert np.all(state.tau2 > 0), "non-positive smoothing variance"
    assert state.labels.min() >= 1 and state.labels.max() <= ctx.G
    assert np.isfinite(state.loglik), "non-finite log-likelihood"
    assert np.all(np.isfinite(state.eta)), "non-finite predictor"


def run_chain(data, config, validate=False):
    """Run the Gibbs sampler and collect retained draws.

    Deterministic given (data, config): the generator is seeded from
    config.seed. With validate=True every iteration is checked against the
    state invariants (simplex, positivity, finiteness, sign consistency).
    """
    rng = np.random.default_rng(config.seed)
    ctx = FitContext(data, config.prior, config.G, validate=validate)
    state = init_state(ctx, rng)

    R = config.retained
    G1 = max(config.G - 1, 0)
    store = DrawStore(
        gamma=np.zeros((R, G1, ctx.p)),
        beta=np.zeros((R, G1, ctx.n_smooth, config.prior.m)),
        tau2=np.zeros((R, G1, ctx.n_smooth)),
        theta=[np.zeros((R, config.G, c)) for c in ctx.C],
        allocations=np.zeros((R, ctx.n), dtype=np.int16),
        loglik=np.zeros(R),
        config=config,
        dataset_digest=data.digest(),
    )

    t_start = time.perf_counter()
    k = 0
    for t in range(config.T):
        try:
            gibbs_sweep(state, ctx, rng)
        except NumericalError as err:
            raise NumericalError(
                f"chain aborted at iteration {t}: {err} "
                f"[G={config.G}, variant={ctx.variant}, seed={config.seed}, "
                f"tau2 range=({state.tau2.min() if state.tau2.size else 0:.3e},"
                f" {state.tau2.max() if state.tau2.size else 0:.3e})]") from err
        if validate:
            validate_state(state, ctx)
        if t >= config.T0 and (t - config.T0 + 1) % config.thin == 0 and k < R:
            store.gamma[k] = state.gamma
            store.beta[k] = state.beta
            store.tau2[k] = state.tau2
            for q in range(ctx.Q):
                store.theta[q][k] = state.theta[q]
            store.allocations[k] = state.labels
            store.loglik[k] = state.loglik
            k += 1

    store.diagnostics = {
        "runtime_s": time.perf_counter() - t_start,
        "floored_liks": state.floored,
        "ridge_events": state.ridge_events,
        "uniform_resamples": state.uniform_resamples,
    }
    return store


# ---------------------------------------------------------------------------
# serialization

def _flat_frame(arr, names):
    return pd.DataFrame(arr.reshape(arr.shape[0], -1), columns=names)


def _read_exact(path):
    """CSV read with bit-exact float parsing (pandas' default parser is not
    correctly rounded)."""
    return pd.read_csv(path, float_precision="round_trip")


def save_draws(store, outdir):
    """Write a DrawStore to a directory: one CSV per parameter block plus a
    JSON manifest with config, seed, digest and version."""
    import os

    os.makedirs(outdir, exist_ok=True)
    cfg = store.config
    G1 = max(cfg.G - 1, 0)
    p = store.gamma.shape[2]
    gamma_cols = [f"g{g + 1}_x{i}" for g in range(G1) for i in range(p)]
    _flat_frame(store.gamma, gamma_cols).to_csv(f"{outdir}/gamma.csv", index=False)

    ns, m = store.beta.shape[2], store.beta.shape[3]
    beta_cols = [f"g{g + 1}_j{j + 1}_b{k + 1}"
                 for g in range(G1) for j in range(ns) for k in range(m)]
    _flat_frame(store.beta, beta_cols).to_csv(f"{outdir}/beta.csv", index=False)

    tau_cols = [f"g{g + 1}_j{j + 1}" for g in range(G1) for j in range(ns)]
    _flat_frame(store.tau2, tau_cols).to_csv(f"{outdir}/tau2.csv", index=False)

    theta_cols = []
    blocks = []
    for q, arr in enumerate(store.theta):
        Cq = arr.shape[2]
        theta_cols += [f"g{g + 1}_q{q + 1}_c{c + 1}"
                       for g in range(cfg.G) for c in range(Cq)]
        blocks.append(arr.reshape(arr.shape[0], -1))
    pd.DataFrame(np.concatenate(blocks, axis=1), columns=theta_cols) \
        .to_csv(f"{outdir}/theta.csv", index=False)

    alloc_cols = [f"u{i + 1}" for i in range(store.allocations.shape[1])]
    _flat_frame(store.allocations, alloc_cols).to_csv(
        f"{outdir}/allocations.csv", index=False)
    pd.DataFrame({"loglik": store.loglik}).to_csv(
        f"{outdir}/loglik.csv", index=False)

    manifest = {
        "config": asdict(cfg),
        "dataset_digest": store.dataset_digest,
        "diagnostics": store.diagnostics,
        "version": __version__,
        "category_counts": [int(a.shape[2]) for a in store.theta],
        "n_retained": int(store.n_retained),
    }
    with open(f"{outdir}/manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)


def load_draws(indir):
    """Read back a DrawStore written by `save_draws`."""
    with open(f"{indir}/manifest.json") as fh:
        manifest = json.load(fh)
    cfg_d = dict(manifest["config"])
    prior = PriorConfig(**cfg_d.pop("prior"))
    cfg = ChainConfig(prior=prior, **cfg_d)
    G, G1 = cfg.G, max(cfg.G - 1, 0)

    gamma = _read_exact(f"{indir}/gamma.csv").to_numpy()
    R = gamma.shape[0]
    gamma = gamma.reshape(R, G1, -1)
    beta_flat = _read_exact(f"{indir}/beta.csv").to_numpy()
    ns = beta_flat.shape[1] // (G1 * cfg.prior.m) if G1 else 0
    beta = beta_flat.reshape(R, G1, ns, cfg.prior.m) if beta_flat.size \
        else np.zeros((R, G1, 0, cfg.prior.m))
    tau2 = _read_exact(f"{indir}/tau2.csv").to_numpy().reshape(R, G1, -1) \
        if ns else np.zeros((R, G1, 0))

    theta_flat = _read_exact(f"{indir}/theta.csv").to_numpy()
    theta, ofs = [], 0
    for Cq in manifest["category_counts"]:
        theta.append(theta_flat[:, ofs:ofs + G * Cq].reshape(R, G, Cq))
        ofs += G * Cq

    alloc = pd.read_csv(f"{indir}/allocations.csv").to_numpy(dtype=np.int64)
    loglik = _read_exact(f"{indir}/loglik.csv")["loglik"].to_numpy()
    return DrawStore(gamma=gamma, beta=beta, tau2=tau2, theta=theta,
                     allocations=alloc, loglik=loglik, config=cfg,
                     dataset_digest=manifest["dataset_digest"],
                     diagnostics=manifest["diagnostics"])
