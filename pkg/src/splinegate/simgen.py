"""Synthetic-data generators: a 2-component and a 6-component mixture with
nonlinear gating surfaces over a pair of uniform covariates, plus a
parliamentary-votes-shaped fixture for exercising the full pipeline."""

from dataclasses import dataclass

import numpy as np

from .exceptions import DataError
from .model import Dataset, gating_prob_matrix


def _sigmoid(t):
    return 1.0 / (1.0 + np.exp(-t))


@dataclass(frozen=True)
class Scenario:
    """Ground-truth configuration of one simulation experiment."""

    name: str
    G: int
    C: tuple                 # category count per manifest variable
    theta: tuple             # per variable: (G, C_q) probability table
    log_odds: tuple          # G-1 callables of (x1, x2)
    n: int = 1000

    @property
    def Q(self):
        return len(self.C)

    def smooth_component(self, g, j, x):
        """Marginal additive piece of log-odds g along covariate j.

        Defined as the log-odds with the other covariate held at zero,
        which isolates the additive term up to a constant.
        """
        x = np.asarray(x, dtype=float)
        zero = np.zeros_like(x)
        if j == 0:
            return self.log_odds[g](x, zero)
        return self.log_odds[g](zero, x)


@dataclass(frozen=True)
class SyntheticDataset:
    """A Dataset plus the truths that generated it."""

    data: Dataset
    true_labels: np.ndarray      # (n,) 1-based component of each unit
    true_eta: np.ndarray         # (n, G-1) gating log-odds
    scenario: Scenario


def _eta_g2_1(x1, x2):
    return 2.0 * (np.sin(3 * np.pi * x1) * np.exp(-x1)
                  + (3 * x2 - 1.5) ** 2) - 0.5


_THETA_G2 = (
    np.array([[0.7, 0.1, 0.2], [0.2, 0.7, 0.1]]),
    np.array([[0.2, 0.8], [0.7, 0.3]]),
    np.array([[0.3, 0.6, 0.1], [0.1, 0.3, 0.6]]),
    np.array([[0.1, 0.1, 0.5, 0.3], [0.5, 0.3, 0.1, 0.1]]),
    np.array([[0.1, 0.1, 0.8], [0.1, 0.8, 0.1]]),
)


def scenario_g2():
    """Two components, five categorical variables, strongly nonlinear
    gating in both covariates."""
    return Scenario(
        name="g2", G=2,
        C=tuple(t.shape[1] for t in _THETA_G2),
        theta=_THETA_G2,
        log_odds=(_eta_g2_1,),
        n=1000,
    )


def _eta_g6_1(x1, x2):
    return 0.7 * (np.sin(3 * np.pi * x1) * np.exp(-x1)
                  + (3 * x2 - 1.5) ** 2) - 0.5


def _eta_g6_2(x1, x2):
    return 0.5 * np.exp(-x1**2) - 0.8


def _eta_g6_3(x1, x2):
    return (0.5 * np.sin(6 * x1 - 1) + np.exp(-16 * (3 * x1 - 0.5) ** 2)
            + _sigmoid(-30 * (x2 - 0.3)))


def _eta_g6_4(x1, x2):
    xt = 2.5 * x1 + 0.5
    poly = (3.4827 * xt - 4.7422 * xt**2 + 3.3035 * xt**3 - 1.2605 * xt**4
            + 0.251 * xt**5 - 0.0204 * xt**6)
    return 0.6 * (poly + _sigmoid(-20 * (x2 - 0.4)))


def _eta_g6_5(x1, x2):
    return 0.5 * (_sigmoid(-10 * x1) + _sigmoid(-50 * (x2 - 0.3)))


# four blocks of three identical variables each; rows are components
_G6_BLOCKS = (
    ((0.7, 0.1, 0.2), (0.7, 0.2, 0.1), (0.1, 0.2, 0.7),
     (0.7, 0.1, 0.2), (0.1, 0.7, 0.2), (0.1, 0.7, 0.2)),
    ((0.7, 0.1, 0.2), (0.7, 0.2, 0.1), (0.1, 0.2, 0.7),
     (0.2, 0.1, 0.7), (0.1, 0.7, 0.2), (0.1, 0.2, 0.7)),
    ((0.7, 0.1, 0.2), (0.2, 0.1, 0.7), (0.2, 0.7, 0.1),
     (0.1, 0.2, 0.7), (0.1, 0.7, 0.2), (0.2, 0.1, 0.7)),
    ((0.7, 0.1, 0.2), (0.2, 0.1, 0.7), (0.2, 0.7, 0.1),
     (0.1, 0.7, 0.2), (0.1, 0.7, 0.2), (0.7, 0.1, 0.2)),
)


def scenario_g6():
    """Six components, twelve three-level variables in four blocks, five
    nonlinear gating surfaces (the sixth component is the baseline)."""
    theta = tuple(np.array(_G6_BLOCKS[q // 3]) for q in range(12))
    return Scenario(
        name="g6", G=6,
        C=(3,) * 12,
        theta=theta,
        log_odds=(_eta_g6_1, _eta_g6_2, _eta_g6_3, _eta_g6_4, _eta_g6_5),
        n=1000,
    )


def generate(scenario, n=None, seed=0):
    """Draw a synthetic dataset from a scenario.

    Covariates are independent Uniform[0, 1]; allocations follow the gating
    probabilities of the true log-odds; responses follow the allocated
    component's probability tables.
    """
    n = scenario.n if n is None else int(n)
    if n < 1:
        raise DataError("need n >= 1")
    rng = np.random.default_rng(seed)
    x = rng.random((n, 2))
    eta = np.stack([f(x[:, 0], x[:, 1]) for f in scenario.log_odds], axis=1)
    probs = gating_prob_matrix(eta)
    u = rng.random(n)
    labels = 1 + (u[:, None] > probs.cumsum(axis=1)).sum(axis=1)
    resp = np.empty((n, scenario.Q), dtype=np.int64)
    for q in range(scenario.Q):
        table = scenario.theta[q][labels - 1]          # (n, C_q)
        uq = rng.random(n)
        resp[:, q] = 1 + (uq[:, None] > table.cumsum(axis=1)).sum(axis=1)
    data = Dataset(
        responses=resp,
        C=scenario.C,
        X_linear=np.ones((n, 1)),
        X_smooth=x,
        response_names=tuple(f"y{q + 1}" for q in range(scenario.Q)),
        linear_names=("intercept",),
        smooth_names=("x1", "x2"),
        unit_ids=tuple(range(1, n + 1)),
    )
    return SyntheticDataset(data=data, true_labels=labels, true_eta=eta,
                            scenario=scenario)


_FIXTURE_PARTIES = ("Con", "Lab", "SNP", "LD")


def brexit_fixture(n=240, G=4, Q=16, seed=7):
    """Synthetic stand-in for the parliamentary-votes data: Q three-level
    vote variables (absent/aye/no) and three metrical covariates named like
    the real analysis. Returns (SyntheticDataset, party) where party is a
    label per unit derived from the true component.

    Only the schema matters downstream; the gating surfaces are mild.
    """
    rng = np.random.default_rng(seed)
    theta = []
    for _ in range(Q):
        t = rng.dirichlet(np.full(3, 0.6), size=G)
        mode = np.eye(3)[rng.integers(0, 3, size=G)]
        tq = 0.85 * mode + 0.15 * t
        theta.append(tq / tq.sum(axis=1, keepdims=True))

    u = rng.random((n, 3))
    eta = np.stack([
        1.2 * np.sin(2 * np.pi * u[:, 0]) - 0.3,
        1.5 * (u[:, 1] - 0.5) + 0.5 * u[:, 2],
        0.8 * _sigmoid(8 * (u[:, 2] - 0.5)) - 0.4 * u[:, 0],
    ], axis=1)[:, : G - 1]
    probs = gating_prob_matrix(eta)
    labels = 1 + (rng.random(n)[:, None] > probs.cumsum(axis=1)).sum(axis=1)

    resp = np.empty((n, Q), dtype=np.int64)
    for q in range(Q):
        table = theta[q][labels - 1]
        resp[:, q] = 1 + (rng.random(n)[:, None] > table.cumsum(axis=1)).sum(axis=1)

    covs = np.column_stack([
        25.0 + 50.0 * u[:, 0],          # age
        0.2 + 0.55 * u[:, 1],           # leave_share
        1.5 + 3.5 * u[:, 2],            # effective_parties
    ])
    data = Dataset(
        responses=resp,
        C=(3,) * Q,
        X_linear=np.ones((n, 1)),
        X_smooth=covs,
        response_names=tuple(f"vote_{q + 1}" for q in range(Q)),
        linear_names=("intercept",),
        smooth_names=("age", "leave_share", "effective_parties"),
        unit_ids=tuple(range(1, n + 1)),
    )
    synth = SyntheticDataset(data=data, true_labels=labels, true_eta=eta,
                             scenario=None)
    party = np.array([_FIXTURE_PARTIES[(lab - 1) % len(_FIXTURE_PARTIES)]
                      for lab in labels])
    return synth, party
