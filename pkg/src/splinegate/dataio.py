"""CSV ingestion and serialization, plus derived-covariate helpers.

Expected schemas: a responses file ``id,<vote columns>`` with categorical
cells, a covariates file ``id,<numeric columns>``, an optional truth sidecar
``unit_id,true_component,eta_*`` for synthetic data, and a vote-share file
``constituency_id,share_1..share_P`` for the effective-number-of-parties
covariate.
"""

import json
import os
from dataclasses import dataclass

import numpy as np
import pandas as pd

from .exceptions import DataError
from .model import Dataset


@dataclass(frozen=True)
class DataManifest:
    """Where the data lives and how its columns are split."""

    responses_path: str
    covariates_path: str
    smooth_covariates: tuple
    linear_covariates: tuple = ()
    id_column: str = "id"
    levels_path: str = None

    def __post_init__(self):
        overlap = set(self.smooth_covariates) & set(self.linear_covariates)
        if overlap:
            raise DataError(f"covariates listed as both smooth and linear: "
                            f"{sorted(overlap)}")


def _read_csv(path):
    if not os.path.exists(path):
        raise DataError(f"file not found: {path}")
    try:
        return pd.read_csv(path, float_precision="round_trip")
    except Exception as err:
        raise DataError(f"cannot parse {path}: {err}") from err


def _encode_column(values, fixed_levels=None):
    """Label-encode one categorical column in first-appearance order, or
    against a fixed level dictionary."""
    values = [str(v) for v in values]
    if fixed_levels is None:
        levels = []
        seen = {}
        for v in values:
            if v not in seen:
                seen[v] = len(levels) + 1
                levels.append(v)
        codes = np.array([seen[v] for v in values], dtype=np.int64)
        return codes, tuple(levels)
    lookup = {lev: k + 1 for k, lev in enumerate(fixed_levels)}
    unknown = sorted({v for v in values if v not in lookup})
    if unknown:
        raise DataError(f"unknown categories {unknown}; "
                        f"known levels: {list(fixed_levels)}")
    return np.array([lookup[v] for v in values], dtype=np.int64), \
        tuple(fixed_levels)


def load_dataset(manifest):
    """Read and validate a Dataset from the files named by a manifest.

    Rows with missing cells are rejected with a row report; no imputation.
    When the manifest names a levels file, its dictionaries are enforced and
    unseen categories raise an error.
    """
    resp_df = _read_csv(manifest.responses_path)
    cov_df = _read_csv(manifest.covariates_path)
    idc = manifest.id_column
    for name, df in (("responses", resp_df), ("covariates", cov_df)):
        if idc not in df.columns:
            raise DataError(f"{name} file lacks id column {idc!r}")
        if df[idc].duplicated().any():
            raise DataError(f"duplicate ids in {name} file")

    for name, df in (("responses", resp_df), ("covariates", cov_df)):
        bad = df.index[df.isna().any(axis=1)]
        if len(bad):
            raise DataError(
                f"{name} file has missing values in rows "
                f"{[int(b) + 2 for b in bad[:20]]} (1-based, header counted)")

    merged_ids = resp_df[idc].tolist()
    if sorted(merged_ids) != sorted(cov_df[idc].tolist()):
        raise DataError("responses and covariates cover different ids")
    cov_df = cov_df.set_index(idc).loc[merged_ids].reset_index()

    fixed = None
    if manifest.levels_path:
        with open(manifest.levels_path) as fh:
            fixed = json.load(fh)

    resp_cols = [c for c in resp_df.columns if c != idc]
    if not resp_cols:
        raise DataError("responses file has no response columns")
    codes, levels, C = [], [], []
    for col in resp_cols:
        fixed_levels = fixed.get(col) if fixed else None
        col_codes, col_levels = _encode_column(resp_df[col], fixed_levels)
        codes.append(col_codes)
        levels.append(col_levels)
        C.append(len(col_levels))

    for col in manifest.smooth_covariates + tuple(manifest.linear_covariates):
        if col not in cov_df.columns:
            raise DataError(f"covariate column {col!r} not in covariates file")
    n = len(resp_df)
    lin = [np.ones(n)]
    for col in manifest.linear_covariates:
        lin.append(pd.to_numeric(cov_df[col], errors="coerce").to_numpy())
    X_linear = np.column_stack(lin)
    smooth = [pd.to_numeric(cov_df[col], errors="coerce").to_numpy()
              for col in manifest.smooth_covariates]
    X_smooth = np.column_stack(smooth) if smooth else np.zeros((n, 0))
    for name, X in (("linear", X_linear), ("smooth", X_smooth)):
        if X.size and not np.all(np.isfinite(X)):
            raise DataError(f"non-numeric or non-finite {name} covariates")

    return Dataset(
        responses=np.column_stack(codes),
        C=tuple(C),
        X_linear=X_linear,
        X_smooth=X_smooth,
        response_names=tuple(resp_cols),
        linear_names=("intercept",) + tuple(manifest.linear_covariates),
        smooth_names=tuple(manifest.smooth_covariates),
        unit_ids=tuple(resp_df[idc].tolist()),
        levels=tuple(levels),
    )


def save_dataset(data, outdir, levels=None, true_labels=None, true_eta=None,
                 extra_labels=None):
    """Write a Dataset (and optional truths) in the ingestion schema.

    Returns the manifest that loads it back. ``levels`` maps codes to level
    strings per response column; integer codes are written verbatim when
    omitted. ``extra_labels`` is an optional {column: values} dict written to
    labels.csv for cross-tabulation workflows.
    """
    os.makedirs(outdir, exist_ok=True)
    if levels is None and data.levels:
        levels = data.levels
    if levels is None:
        # identity dictionary so codes survive re-encoding on reload
        levels = tuple(tuple(str(c + 1) for c in range(cq)) for cq in data.C)
    ids = list(data.unit_ids) if data.unit_ids else \
        list(range(1, data.n + 1))

    resp = {"id": ids}
    names = data.response_names or tuple(
        f"y{q + 1}" for q in range(data.Q))
    for q, name in enumerate(names):
        col = data.responses[:, q]
        if levels is not None:
            col = [levels[q][c - 1] for c in col]
        resp[name] = col
    pd.DataFrame(resp).to_csv(f"{outdir}/responses.csv", index=False)

    cov = {"id": ids}
    lin_names = data.linear_names[1:] if data.linear_names else \
        tuple(f"w{k + 1}" for k in range(data.n_linear - 1))
    for k, name in enumerate(lin_names):
        cov[name] = data.X_linear[:, k + 1]
    smooth_names = data.smooth_names or tuple(
        f"x{j + 1}" for j in range(data.n_smooth))
    for j, name in enumerate(smooth_names):
        cov[name] = data.X_smooth[:, j]
    pd.DataFrame(cov).to_csv(f"{outdir}/covariates.csv", index=False)

    levels_path = f"{outdir}/levels.json"
    with open(levels_path, "w") as fh:
        json.dump({name: list(levels[q]) for q, name in enumerate(names)},
                  fh, indent=2, sort_keys=True)

    if true_labels is not None:
        truth = {"unit_id": ids, "true_component": np.asarray(true_labels)}
        if true_eta is not None:
            for g in range(np.asarray(true_eta).shape[1]):
                truth[f"eta_{g + 1}"] = np.asarray(true_eta)[:, g]
        pd.DataFrame(truth).to_csv(f"{outdir}/truth.csv", index=False)

    if extra_labels is not None:
        lab = {"id": ids}
        lab.update(extra_labels)
        pd.DataFrame(lab).to_csv(f"{outdir}/labels.csv", index=False)

    return DataManifest(
        responses_path=f"{outdir}/responses.csv",
        covariates_path=f"{outdir}/covariates.csv",
        smooth_covariates=tuple(smooth_names),
        linear_covariates=tuple(lin_names),
        levels_path=levels_path,
    )


def load_truth(path):
    """Read a truth sidecar; returns (labels, eta or None)."""
    df = _read_csv(path)
    if "true_component" not in df.columns:
        raise DataError("truth sidecar lacks a true_component column")
    labels = df["true_component"].to_numpy(dtype=np.int64)
    eta_cols = [c for c in df.columns if c.startswith("eta_")]
    eta = df[eta_cols].to_numpy(dtype=float) if eta_cols else None
    return labels, eta


def effective_parties(shares):
    """Effective number of competing parties: exp of the Shannon entropy of
    one constituency's vote shares, with the 0 log 0 = 0 convention.

    Ranges from 1 (all votes on one party) to P (equidistribution).
    """
    w = np.asarray(shares, dtype=float)
    if w.ndim != 1:
        raise DataError("shares must be a 1-d vector")
    if w.min() < 0:
        raise DataError("vote shares must be nonnegative")
    if abs(w.sum() - 1.0) > 1e-9:
        raise DataError(f"vote shares sum to {w.sum()}, not 1")
    pos = w[w > 0]
    return float(np.exp(-(pos * np.log(pos)).sum()))


@dataclass(frozen=True)
class VoteShareTable:
    """Per-constituency party vote shares (simplex rows)."""

    ids: tuple
    shares: np.ndarray  # (n_constituencies, P)

    @property
    def P(self):
        return self.shares.shape[1]

    def effective_parties(self):
        """The derived covariate, one value per constituency."""
        return np.array([effective_parties(row) for row in self.shares])


def load_vote_shares(path, id_column="constituency_id"):
    """Read a vote-share table with validated simplex rows."""
    df = _read_csv(path)
    if id_column not in df.columns:
        raise DataError(f"vote-share file lacks id column {id_column!r}")
    share_cols = [c for c in df.columns if c != id_column]
    shares = df[share_cols].to_numpy(dtype=float)
    for i, row in enumerate(shares):
        if row.min() < 0 or abs(row.sum() - 1.0) > 1e-9:
            raise DataError(f"row {i + 2} of {path} is not a simplex point")
    return VoteShareTable(ids=tuple(df[id_column].tolist()), shares=shares)
