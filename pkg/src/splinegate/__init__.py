"""Bayesian mixture-of-experts clustering for categorical data, with
component weights driven by penalized-spline additive gating networks."""

__version__ = "0.1.0"

from .basis import (SplineBasis, PenaltyMatrix, build_bspline_basis,
                    build_penalty, center_coefficients)
from .model import (Dataset, ComponentParams, GatingParams, PriorConfig,
                    component_loglik, loglik_matrix, gating_probs,
                    gating_prob_matrix, linear_predictor, predictor_matrix)
from .augment import (LogisticMixture, AugmentedState, logistic_mixture,
                      sample_utilities, sample_indicators, indicator_probs,
                      utilities_from_uniforms, gating_offsets)
from .sampler import (ChainConfig, DrawStore, run_chain, gibbs_sweep,
                      save_draws, load_draws)
from .postproc import (RelabeledDraws, FitSummary, relabel, map_allocation,
                       count_nonempty, smooth_summary, summarize_fit)
from .metrics import aicm, ari, sari, rase
from .simgen import Scenario, SyntheticDataset, scenario_g2, scenario_g6, generate
from .dataio import DataManifest, load_dataset, save_dataset, effective_parties
