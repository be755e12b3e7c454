import numpy as np
import pytest

from splinegate.dataio import (DataManifest, effective_parties, load_dataset,
                               load_truth, load_vote_shares, save_dataset)
from splinegate.exceptions import DataError
from splinegate.simgen import brexit_fixture, generate, scenario_g2


def _write(path, text):
    path.write_text(text)
    return str(path)


def test_load_small_fixture(tmp_path):
    resp = _write(tmp_path / "r.csv",
                  "id,v1,v2\na,red,yes\nb,green,no\nc,blue,yes\n")
    cov = _write(tmp_path / "c.csv",
                 "id,x1,w1\na,0.1,1.0\nb,0.5,2.0\nc,0.9,3.0\n")
    manifest = DataManifest(responses_path=resp, covariates_path=cov,
                            smooth_covariates=("x1",), linear_covariates=("w1",))
    data = load_dataset(manifest)
    assert data.n == 3 and data.Q == 2
    assert data.C == (3, 2)
    # first-appearance encoding
    assert data.responses[:, 0].tolist() == [1, 2, 3]
    assert data.responses[:, 1].tolist() == [1, 2, 1]
    assert data.levels == (("red", "green", "blue"), ("yes", "no"))
    assert np.allclose(data.X_linear[:, 0], 1.0)
    assert np.allclose(data.X_linear[:, 1], [1.0, 2.0, 3.0])
    assert np.allclose(data.X_smooth[:, 0], [0.1, 0.5, 0.9])


def test_missing_cell_rejected_with_row_report(tmp_path):
    resp = _write(tmp_path / "r.csv", "id,v1\na,x\nb,\nc,y\n")
    cov = _write(tmp_path / "c.csv", "id,x1\na,0.1\nb,0.5\nc,0.9\n")
    manifest = DataManifest(responses_path=resp, covariates_path=cov,
                            smooth_covariates=("x1",))
    with pytest.raises(DataError, match="missing values.*3"):
        load_dataset(manifest)


def test_unknown_category_against_fixed_levels(tmp_path):
    import json
    resp = _write(tmp_path / "r.csv", "id,v1\na,aye\nb,nay\n")
    cov = _write(tmp_path / "c.csv", "id,x1\na,0.1\nb,0.5\n")
    levels = _write(tmp_path / "levels.json",
                    json.dumps({"v1": ["absent", "aye", "no"]}))
    manifest = DataManifest(responses_path=resp, covariates_path=cov,
                            smooth_covariates=("x1",), levels_path=levels)
    with pytest.raises(DataError, match="nay.*absent"):
        load_dataset(manifest)


def test_structural_errors(tmp_path):
    resp = _write(tmp_path / "r.csv", "id,v1\na,x\na,y\n")
    cov = _write(tmp_path / "c.csv", "id,x1\na,0.1\nb,0.5\n")
    manifest = DataManifest(responses_path=resp, covariates_path=cov,
                            smooth_covariates=("x1",))
    with pytest.raises(DataError, match="duplicate"):
        load_dataset(manifest)
    with pytest.raises(DataError):
        DataManifest(responses_path=resp, covariates_path=cov,
                     smooth_covariates=("x1",), linear_covariates=("x1",))
    with pytest.raises(DataError, match="not found"):
        load_dataset(DataManifest(responses_path=str(tmp_path / "none.csv"),
                                  covariates_path=cov,
                                  smooth_covariates=("x1",)))


def test_roundtrip_synthetic(tmp_path):
    synth = generate(scenario_g2(), n=40, seed=1)
    manifest = save_dataset(synth.data, tmp_path / "d",
                            true_labels=synth.true_labels,
                            true_eta=synth.true_eta)
    back = load_dataset(manifest)
    assert np.array_equal(back.responses, synth.data.responses)
    assert back.C == synth.data.C
    assert np.array_equal(back.X_smooth, synth.data.X_smooth)
    assert np.array_equal(back.X_linear, synth.data.X_linear)
    assert back.digest() == synth.data.digest()
    labels, eta = load_truth(str(tmp_path / "d" / "truth.csv"))
    assert np.array_equal(labels, synth.true_labels)
    assert np.array_equal(eta, synth.true_eta)


def test_roundtrip_brexit_fixture(tmp_path):
    synth, party = brexit_fixture(n=60, seed=3)
    levels = tuple(("absent", "aye", "no") for _ in range(synth.data.Q))
    manifest = save_dataset(synth.data, tmp_path / "d", levels=levels,
                            true_labels=synth.true_labels,
                            extra_labels={"party": party})
    back = load_dataset(manifest)
    assert back.C == (3,) * 16
    assert np.array_equal(back.responses, synth.data.responses)
    assert back.levels == levels
    with open(tmp_path / "d" / "responses.csv") as fh:
        header = fh.readline()
        first = fh.readline()
    assert "vote_1" in header
    assert any(tok in first for tok in ("absent", "aye", "no"))
    lab = (tmp_path / "d" / "labels.csv").read_text()
    assert "party" in lab


def test_effective_parties_reference_values():
    one_hot = np.zeros(13)
    one_hot[4] = 1.0
    assert effective_parties(one_hot) == 1.0
    assert abs(effective_parties(np.full(13, 1 / 13)) - 13.0) < 1e-12
    shares = np.zeros(13)
    shares[0] = shares[1] = 0.5
    assert abs(effective_parties(shares) - 2.0) < 1e-12


def test_effective_parties_invariances_and_errors():
    rng = np.random.default_rng(0)
    w = rng.dirichlet(np.ones(13))
    a = effective_parties(w)
    b = effective_parties(w[rng.permutation(13)])
    assert abs(a - b) < 1e-12
    assert 1.0 <= a <= 13.0
    with pytest.raises(DataError):
        effective_parties(np.array([0.5, 0.6]))
    with pytest.raises(DataError):
        effective_parties(np.array([-0.1, 1.1]))


def test_load_vote_shares(tmp_path):
    path = _write(tmp_path / "s.csv",
                  "constituency_id,share_1,share_2,share_3\n"
                  "c1,0.5,0.5,0.0\nc2,0.2,0.3,0.5\n")
    table = load_vote_shares(path)
    assert table.ids == ("c1", "c2")
    assert table.P == 3
    assert abs(effective_parties(table.shares[0]) - 2.0) < 1e-12
    assert np.allclose(table.effective_parties(),
                       [2.0, effective_parties(np.array([0.2, 0.3, 0.5]))])
    bad = _write(tmp_path / "bad.csv",
                 "constituency_id,share_1,share_2\nc1,0.7,0.7\n")
    with pytest.raises(DataError, match="simplex"):
        load_vote_shares(bad)
