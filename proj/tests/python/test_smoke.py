import math

import numpy as np
import pytest

import nestkrig as nk

DESIGN = np.array([[0.1], [0.3], [0.5], [0.7], [0.9]])
VALUES = np.sin(2 * np.pi * DESIGN[:, 0]) + DESIGN[:, 0]
GROUPS = [[0, 1, 2], [3, 4]]


def five_point_bank():
    spec = nk.KernelSpec.isotropic("squared_exponential", 1.0, 0.2)
    return spec, nk.SubmodelBank.fit(spec, DESIGN, VALUES, GROUPS)


def test_kernel_closed_form():
    spec = nk.KernelSpec.isotropic("matern32", 2.0, 0.5)
    r = math.sqrt(3) * 0.3 / 0.5
    assert spec(np.array([0.1]), np.array([0.4])) == pytest.approx(2.0 * (1 + r) * math.exp(-r))
    assert spec.neb_qualified
    assert not nk.KernelSpec.isotropic("squared_exponential", 1.0, 0.2).neb_qualified


def test_five_point_nested_prediction():
    _, bank = five_point_bank()
    p = nk.nested_predict(bank, np.array([0.85]))
    assert p["mean"] == pytest.approx(0.2052901533099782, abs=1e-12)
    assert p["variance"] == pytest.approx(0.01355211422495295, abs=1e-12)
    for i in range(5):
        assert nk.nested_predict(bank, DESIGN[i])["mean"] == pytest.approx(VALUES[i], abs=1e-6)


def test_nested_beats_variance_rules_in_exact_mse():
    spec, bank = five_point_bank()
    x = np.array([0.6])
    nested = nk.nested_predict(bank, x)
    nested_mse = nk.exact_mse(nested["effective_weights"], x, spec, DESIGN)
    assert nested_mse == pytest.approx(nested["variance"], abs=1e-10)
    for method in ("poe", "gpoe", "bcm", "rbcm"):
        assert nk.aggregate(bank, method, x)["mse"] >= nested_mse - 1e-12


def test_aggregated_process_interpolates_covariance():
    spec, bank = five_point_bank()
    proc = nk.AggregatedProcess(bank)
    K = nk.kernel_matrix(spec, DESIGN)
    assert np.max(np.abs(proc.design_prior_covariance() - K)) < 1e-8
    assert nk.k_agg(proc, np.array([0.85]), np.array([0.3])) == pytest.approx(
        0.04071836116439567, abs=1e-12
    )
    paths = nk.sample_paths(proc, DESIGN, 3, 5, True, VALUES)
    assert paths.shape == (3, 5)
    assert np.max(np.abs(paths - VALUES)) < 1e-5


def test_error_analysis_identities():
    _, bank = five_point_bank()
    analysis = nk.ErrorAnalysis(bank)
    ident = analysis.covariance_identities(np.array([0.42]))
    assert ident["lhs_mean"] == pytest.approx(ident["rhs_mean"], abs=1e-10)
    assert ident["lhs_var"] == pytest.approx(ident["rhs_var"], abs=1e-10)
    row = analysis.bounds_row(np.array([0.42]))
    assert row["mean_gap_rms"] <= row["mean_gap_bound"] * (1 + 1e-9)


def test_errors_are_translated():
    spec = nk.KernelSpec.isotropic("squared_exponential", 1.0, 0.2)
    with pytest.raises(nk.NestkrigError, match="neb-qualified"):
        nk.run_nonconsistency(spec, np.array([0.2]), np.array([0.8]), 0.1, [50, 100])
    with pytest.raises(nk.NestkrigError):
        nk.KernelSpec.isotropic("matern32", -1.0, 0.2)


def test_experiments_and_cli(tmp_path):
    spec = nk.KernelSpec.isotropic("matern32", 1.0, 0.3)
    report = nk.run_nonconsistency(spec, np.array([0.2]), np.array([0.6]), 0.0976, [50, 100])
    rec = report["records"]
    assert [r["p"] for r in rec] == [23, 40]
    assert all(r["mse_full"] <= r["mse_nested"] <= r["mse_method"] for r in rec)

    out = tmp_path / "pred.csv"
    code, _, err = nk.run_cli(["predict", "--grid-count", "5", "--out", str(out)])
    assert code == 0, err
    assert out.read_text().splitlines()[0] == "x,mean,variance"
    code, _, err = nk.run_cli(["predict", "--no-such-flag"])
    assert code == 1 and err.startswith("ERROR:argument:")
