"""Domain types for data and parameters, component log-likelihoods, and the
gating map from additive predictors to component weights."""

import hashlib
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigError, DataError

VARIANTS = ("semiparametric", "parametric", "blca")

# floor applied to component probabilities inside likelihood evaluation so a
# category that underflowed in a Dirichlet draw cannot produce -inf
LOGLIK_FLOOR = 1e-300


@dataclass(frozen=True)
class Dataset:
    """Categorical responses plus gating covariates for n units.

    ``responses`` holds 1-based category codes (column q in 1..C[q]).
    ``X_linear`` carries the intercept column plus any linear covariates;
    ``X_smooth`` the metrical covariates that receive spline expansions.
    """

    responses: np.ndarray          # (n, Q) int codes, 1-based
    C: tuple                       # per-variable category counts
    X_linear: np.ndarray           # (n, J*+1), first column all ones
    X_smooth: np.ndarray           # (n, J - J*)
    response_names: tuple = ()
    linear_names: tuple = ()
    smooth_names: tuple = ()
    unit_ids: tuple = ()
    levels: tuple = ()             # per-variable category label dictionaries

    def __post_init__(self):
        resp = np.asarray(self.responses)
        if resp.ndim != 2:
            raise DataError("responses must be a 2-d code matrix")
        n, Q = resp.shape
        if len(self.C) != Q:
            raise DataError("category count vector does not match responses")
        for q in range(Q):
            col = resp[:, q]
            if col.min() < 1 or col.max() > self.C[q]:
                raise DataError(
                    f"response column {q} has codes outside [1, {self.C[q]}]")
        for name, X in (("X_linear", self.X_linear), ("X_smooth", self.X_smooth)):
            X = np.asarray(X)
            if X.shape[0] != n:
                raise DataError(f"{name} row count does not match responses")
            if X.size and not np.all(np.isfinite(X)):
                raise DataError(f"{name} contains non-finite values")
        if self.X_linear.shape[1] < 1 or not np.allclose(self.X_linear[:, 0], 1.0):
            raise DataError("X_linear must start with an intercept column of ones")

    @property
    def n(self):
        return self.responses.shape[0]

    @property
    def Q(self):
        return self.responses.shape[1]

    @property
    def n_linear(self):
        """Columns of the linear design (intercept included)."""
        return self.X_linear.shape[1]

    @property
    def n_smooth(self):
        return self.X_smooth.shape[1]

    def digest(self):
        """Stable content hash used to stamp chain output."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.responses, dtype=np.int64).tobytes())
        h.update(np.ascontiguousarray(self.X_linear, dtype=np.float64).tobytes())
        h.update(np.ascontiguousarray(self.X_smooth, dtype=np.float64).tobytes())
        return h.hexdigest()[:16]


@dataclass(frozen=True)
class ComponentParams:
    """Per-variable category probabilities of one mixture component."""

    theta: tuple  # one probability vector of length C_q per variable

    def __post_init__(self):
        for q, t in enumerate(self.theta):
            t = np.asarray(t)
            if t.min() <= 0 or abs(t.sum() - 1.0) > 1e-12:
                raise DataError(f"theta[{q}] is not on the simplex")


@dataclass(frozen=True)
class GatingParams:
    """Gating-network coefficients for components 1..G-1.

    The baseline component G is pinned at zero coefficients and never stored.
    ``beta`` has shape (G-1, n_smooth, m); it is empty for the parametric and
    covariate-free variants.
    """

    gamma: np.ndarray            # (G-1, p) fixed effects
    beta: np.ndarray             # (G-1, n_smooth, m) spline coefficients
    smoothing_vars: np.ndarray   # (G-1, n_smooth) positive

    def __post_init__(self):
        if self.smoothing_vars.size and self.smoothing_vars.min() <= 0:
            raise DataError("smoothing variances must be positive")


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters and model-variant switch.

    a, b      inverse-gamma prior on each smoothing variance
    v         prior variance of the fixed gating effects
    delta     Dirichlet hyperparameter for every response category
    H         size of the Gaussian scale mixture approximating the logistic
    m         spline basis size per smooth covariate
    variant   semiparametric | parametric | blca
    """

    a: float = 1.0
    b: float = 0.005
    v: float = 100.0
    delta: float = 1.0
    H: int = 6
    m: int = 23
    variant: str = "semiparametric"

    def __post_init__(self):
        if min(self.a, self.b, self.v, self.delta) <= 0:
            raise ConfigError("prior hyperparameters must be positive")
        if self.H not in (3, 6):
            raise ConfigError(f"unsupported mixture size H={self.H}")
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}")


def component_loglik(unit, params):
    """Log-likelihood of one unit's responses under one component.

    Returns sum_q log theta_q[code]; -inf when an observed category has zero
    probability (callers that need finite values use `loglik_matrix`, which
    floors and counts such events).
    """
    total = 0.0
    for q, t in enumerate(params.theta):
        p = float(np.asarray(t)[int(unit[q]) - 1])
        if p <= 0.0:
            return -np.inf
        total += np.log(p)
    return total


def loglik_matrix(responses, theta, floor=LOGLIK_FLOOR):
    """Component log-likelihoods for all units at once.

    Parameters
    ----------
    responses : (n, Q) int codes, 1-based
    theta : list over q of arrays (G, C_q)

    Returns (loglik (n, G), floored) where ``floored`` counts (unit, q, g)
    cells whose probability was raised to ``floor`` to stay finite.
    """
    n = responses.shape[0]
    G = theta[0].shape[0]
    out = np.zeros((n, G))
    floored = 0
    for q in range(len(theta)):
        probs = theta[q][:, responses[:, q] - 1]  # (G, n)
        small = probs < floor
        if small.any():
            floored += int(small.sum())
            probs = np.maximum(probs, floor)
        out += np.log(probs).T
    return out, floored


def gating_probs(eta):
    """Component weights for one unit from its G-1 gating predictors.

    Baseline component G has predictor 0; computed with a max shift so the
    output is a valid simplex point for any finite eta.
    """
    eta = np.asarray(eta, dtype=float)
    logits = np.concatenate([eta, [0.0]])
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def gating_prob_matrix(eta):
    """Vectorized `gating_probs` for an (n, G-1) predictor matrix."""
    eta = np.asarray(eta, dtype=float)
    logits = np.concatenate([eta, np.zeros((eta.shape[0], 1))], axis=1)
    logits -= logits.max(axis=1, keepdims=True)
    w = np.exp(logits)
    return w / w.sum(axis=1, keepdims=True)


def linear_predictor(data, gating, bases, g, variant="semiparametric"):
    """Gating predictor eta_g over all units for component g (0-based).

    semiparametric: X_linear gamma_g + sum_j B_j beta_gj
    parametric:     [X_linear, X_smooth] gamma_g
    blca:           intercept only
    """
    if variant not in VARIANTS:
        raise ConfigError(f"unknown variant {variant!r}")
    gamma = gating.gamma[g]
    if variant == "blca":
        return np.full(data.n, float(gamma[0]))
    if variant == "parametric":
        X = np.concatenate([data.X_linear, data.X_smooth], axis=1)
        if X.shape[1] != gamma.shape[0]:
            raise DataError("gamma length does not match the parametric design")
        return X @ gamma
    if data.X_linear.shape[1] != gamma.shape[0]:
        raise DataError("gamma length does not match X_linear")
    eta = data.X_linear @ gamma
    for j, basis in enumerate(bases):
        beta = gating.beta[g, j]
        if basis.design.shape[1] != beta.shape[0]:
            raise DataError(f"beta size mismatch for smooth covariate {j}")
        eta = eta + basis.design @ beta
    return eta


def predictor_matrix(data, gating, bases, variant="semiparametric"):
    """Stack `linear_predictor` for g = 1..G-1 into an (n, G-1) matrix."""
    G1 = gating.gamma.shape[0]
    out = np.empty((data.n, G1))
    for g in range(G1):
        out[:, g] = linear_predictor(data, gating, bases, g, variant)
    return out
