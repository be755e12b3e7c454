"""Cubic B-spline design matrices, random-walk penalties, and the zero-sum
centering correction used to identify the smooth gating effects."""

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import BSpline
from scipy.linalg import cho_factor, cho_solve

from .exceptions import DataError, DegenerateConstraintError, InvalidBasisError

DEGREE = 3  # cubic splines throughout


@dataclass(frozen=True)
class SplineBasis:
    """Design matrix of a clamped cubic B-spline basis for one covariate.

    Rows of ``design`` evaluate the ``num_basis`` basis functions at the
    training points; each row sums to one and has at most four nonzero
    entries. ``orig_range`` keeps the covariate's range in original units
    when the training values were rescaled before construction.
    """

    knots: np.ndarray
    num_basis: int
    design: np.ndarray
    covariate_index: int = -1
    orig_range: tuple = field(default=None)

    @property
    def range(self):
        """Knot span (lo, hi) the basis is defined on."""
        return float(self.knots[DEGREE]), float(self.knots[-DEGREE - 1])

    def evaluate(self, x):
        """Evaluate the basis at new points, clamping out-of-range values.

        Returns (matrix, clamped) where ``clamped`` flags the points that
        fell outside the knot span and were pinned to its boundary.
        """
        x = np.asarray(x, dtype=float)
        lo, hi = self.range
        clamped = (x < lo) | (x > hi)
        xc = np.clip(x, lo, hi)
        mat = BSpline.design_matrix(xc, self.knots, DEGREE).toarray()
        return mat, clamped


@dataclass(frozen=True)
class PenaltyMatrix:
    """First-order difference penalty K = D1'D1 (rank m-1, annihilates constants)."""

    order: int
    matrix: np.ndarray


def _clamped_knots(m, lo, hi):
    interior = np.linspace(lo, hi, m - 2)[1:-1]
    return np.concatenate([np.repeat(lo, DEGREE + 1), interior,
                           np.repeat(hi, DEGREE + 1)])


def build_bspline_basis(x, m, knot_range=None, covariate_index=-1, orig_range=None):
    """Build a clamped cubic B-spline design matrix with equidistant knots.

    Parameters
    ----------
    x : array (n,)
        Covariate values; must be finite and inside ``knot_range``.
    m : int
        Number of basis functions (>= 4).
    knot_range : (lo, hi), optional
        Knot span; defaults to (min(x), max(x)).
    """
    x = np.asarray(x, dtype=float)
    if m < 4:
        raise InvalidBasisError(f"cubic basis needs m >= 4, got m={m}")
    if x.ndim != 1 or x.size == 0:
        raise DataError("x must be a non-empty 1-d array")
    if not np.all(np.isfinite(x)):
        raise DataError("covariate contains non-finite values")
    if knot_range is None:
        knot_range = (float(x.min()), float(x.max()))
    lo, hi = float(knot_range[0]), float(knot_range[1])
    if not (lo < hi):
        raise InvalidBasisError(f"degenerate knot range ({lo}, {hi})")
    if x.min() < lo or x.max() > hi:
        raise DataError("knot range does not cover the observed covariate values")
    knots = _clamped_knots(m, lo, hi)
    design = BSpline.design_matrix(x, knots, DEGREE).toarray()
    return SplineBasis(knots=knots, num_basis=m, design=design,
                       covariate_index=covariate_index, orig_range=orig_range)


def build_penalty(m):
    """Penalty matrix of a first-order random walk on m coefficients."""
    if m < 2:
        raise InvalidBasisError(f"penalty needs m >= 2, got m={m}")
    d1 = np.diff(np.eye(m), axis=0)
    return PenaltyMatrix(order=1, matrix=d1.T @ d1)


def center_coefficients(beta, basis, precision):
    """Project a coefficient draw onto the zero-sum-of-fitted-values subspace.

    Applies the conditioning-by-kriging correction
    ``beta - P^-1 B'1 (1'B P^-1 B'1)^-1 1'B beta`` so the returned vector
    satisfies 1'B beta = 0 exactly in distribution; ``precision`` must be the
    full conditional precision of the draw being corrected.
    """
    beta = np.asarray(beta, dtype=float)
    b1 = basis.design.sum(axis=0)  # B'1
    factor = cho_factor(precision, lower=True)
    u = cho_solve(factor, b1)
    denom = float(b1 @ u)
    if denom <= 0.0 or not np.isfinite(denom):
        raise DegenerateConstraintError(
            f"constraint scalar 1'B P^-1 B'1 = {denom} is not positive")
    return beta - u * (float(b1 @ beta) / denom)
