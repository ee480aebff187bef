"""Command-line interface: output formats, file I/O, seeds, and exit codes.

All invocations run in-process through ``main(argv)`` so coverage tracking
and monkeypatching work; exit codes follow the documented contract
(0 success, 1 domain error, 2 numerical failure, 64 usage).
"""
from __future__ import annotations

import csv
import io
import json

import numpy as np
import pytest

from sphertrunc import __version__
from sphertrunc.cli import main
from sphertrunc.forward import alpha, alpha_k, forward_family
from sphertrunc.perturb import reconstruct
from sphertrunc.tables import GAMMA_TABLES
from sphertrunc.tallis import jacobian_det, jacobian_det_lower_bound

LAM = "0.1,0.3,0.8,2.2"
LAM_ARR = np.array([0.1, 0.3, 0.8, 2.2])


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    rows = list(csv.reader(io.StringIO(text)))
    return rows[0], rows[1:]


# ---------------------------------------------------------------------------
# forward

def test_forward_json_round_trips_floats(capsys):
    code, out, err = run(capsys, "forward", "--rho", "6", "--lambda", LAM)
    assert code == 0
    payload = json.loads(out)
    assert payload["schema"] == "sphertrunc/1"
    assert payload["command"] == "forward"
    a_ref = alpha(6.0, LAM_ARR)
    assert payload["alpha"] == a_ref  # 17 significant digits survive JSON
    aks_ref = np.array([alpha_k(6.0, LAM_ARR, k) for k in range(4)])
    assert payload["alpha_k"] == list(aks_ref)
    assert payload["mu"] == list(LAM_ARR * aks_ref / a_ref)
    assert payload["alpha_method"] == "series"
    assert "alpha(" in err


def test_forward_csv_format(capsys):
    code, out, _ = run(capsys, "forward", "--rho", "6", "--lambda", LAM,
                       "--format", "csv")
    assert code == 0
    assert "\r\n" in out
    header, rows = parse_csv(out)
    assert header == ["component", "lambda", "alpha_k", "mu"]
    assert len(rows) == 4
    assert [float(r[1]) for r in rows] == list(LAM_ARR)


def test_forward_out_file(capsys, tmp_path):
    target = tmp_path / "fwd.json"
    code, out, err = run(capsys, "forward", "--rho", "6", "--lambda", LAM,
                         "--out", str(target))
    assert code == 0
    assert out == ""
    payload = json.loads(target.read_text())
    assert payload["alpha"] == alpha(6.0, LAM_ARR)


def test_spectrum_file_input(capsys, tmp_path):
    spec = tmp_path / "lam.csv"
    spec.write_text("eigenvalue\n0.1\n0.3\n0.8\n2.2\n")
    code_f, out_f, _ = run(capsys, "forward", "--rho", "6",
                           "--lambda-file", str(spec))
    code_i, out_i, _ = run(capsys, "forward", "--rho", "6", "--lambda", LAM)
    assert code_f == 0
    assert out_f == out_i


def test_spectrum_file_requires_header(capsys, tmp_path):
    spec = tmp_path / "lam.csv"
    spec.write_text("0.1\n0.3\n0.8\n2.2\n")
    code, _, err = run(capsys, "forward", "--rho", "6", "--lambda-file", str(spec))
    assert code == 1
    assert "header" in err


def test_spectrum_file_rejects_extra_columns(capsys, tmp_path):
    spec = tmp_path / "lam.csv"
    spec.write_text("eigenvalue,weight\n0.1,1\n0.3,1\n")
    code, _, err = run(capsys, "forward", "--rho", "6", "--lambda-file", str(spec))
    assert code == 1


def test_negative_spectrum_is_domain_error(capsys):
    code, _, err = run(capsys, "forward", "--rho", "6", "--lambda=-1,2")
    assert code == 1
    assert "domain error" in err


def test_unparsable_spectrum_is_domain_error(capsys):
    code, _, err = run(capsys, "forward", "--rho", "6", "--lambda", "0.1,abc")
    assert code == 1


# ---------------------------------------------------------------------------
# reconstruct

def test_reconstruct_from_forward_round_trip(capsys):
    code, out, err = run(capsys, "reconstruct", "--rho", "12",
                         "--mu-from", "forward", "--lambda", LAM, "--order", "4")
    assert code == 0
    payload = json.loads(out)
    a, aks = forward_family(12.0, LAM_ARR)
    mu = LAM_ARR * aks / a
    assert payload["mu"] == list(mu)
    rec = reconstruct(mu, 12.0, order=4)
    assert payload["lambda_hat"] == list(rec.lambda_hat)
    assert np.max(np.abs(np.array(payload["lambda_hat"]) - LAM_ARR)) < 0.05
    assert payload["diagnostics"]["domain_ok"] is True
    assert len(payload["partial_sums"]) == 5
    assert "lambda_tilde" in err


def test_reconstruct_csv_layout(capsys):
    code, out, _ = run(capsys, "reconstruct", "--rho", "12",
                       "--mu-from", "forward", "--lambda", LAM,
                       "--order", "3", "--format", "csv")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["component", "mu", "coeff_1", "coeff_2", "coeff_3", "lambda_hat"]
    assert len(rows) == 4


def test_reconstruct_with_residuals(capsys):
    code, out, _ = run(capsys, "reconstruct", "--rho", "12",
                       "--mu-from", "forward", "--lambda", LAM,
                       "--with-residuals")
    assert code == 0
    payload = json.loads(out)
    res = payload["diagnostics"]["residuals"]
    assert set(res) == {"0", "1", "2", "3", "4"} or set(map(int, res)) == {0, 1, 2, 3, 4}


def test_reconstruct_needs_some_moments(capsys):
    code, _, err = run(capsys, "reconstruct", "--rho", "12")
    assert code == 1
    assert "--mu" in err


def test_reconstruct_rejects_infeasible_moments(capsys):
    code, _, err = run(capsys, "reconstruct", "--rho", "6", "--mu=-0.5,1.0")
    assert code == 1


# ---------------------------------------------------------------------------
# simulate

def test_simulate_csv_records(capsys):
    code, out, err = run(capsys, "simulate", "--lambda", LAM, "--rho", "6",
                         "--n", "80,160", "--replicas", "4",
                         "--estimators", "order-2", "--seed", "3")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["rho", "n_samples", "replicas", "estimator", "component",
                      "bias", "variance", "stderr_variance", "mean_kept"]
    assert len(rows) == 8  # 2 N x 4 components
    assert {r[3] for r in rows} == {"order-2"}


def test_simulate_fits_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--lambda", LAM, "--rho", "6",
                       "--n", "80,160", "--replicas", "4",
                       "--estimators", "order-2", "--seed", "3", "--fits")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["rho", "estimator", "component", "intercept", "slope",
                      "r_squared"]
    assert len(rows) == 4


def test_simulate_json_payload(capsys):
    code, out, _ = run(capsys, "simulate", "--lambda", LAM, "--rho", "6",
                       "--n", "80", "--replicas", "4",
                       "--estimators", "iterative", "--seed", "3",
                       "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert set(payload) >= {"schema", "command", "records", "variance_fits",
                            "failures", "seed"}
    assert payload["seed"] == 3
    assert len(payload["records"]) == 4


def test_simulate_env_seed_fallback(capsys, monkeypatch):
    argv = ("simulate", "--lambda", LAM, "--rho", "6", "--n", "80",
            "--replicas", "4", "--estimators", "order-1")
    monkeypatch.setenv("SPHERTRUNC_SEED", "3")
    code_env, out_env, _ = run(capsys, *argv)
    monkeypatch.delenv("SPHERTRUNC_SEED")
    code_arg, out_arg, _ = run(capsys, *argv, "--seed", "3")
    assert code_env == code_arg == 0
    assert out_env == out_arg


def test_simulate_bad_env_seed(capsys, monkeypatch):
    monkeypatch.setenv("SPHERTRUNC_SEED", "not-a-number")
    code, _, err = run(capsys, "simulate", "--lambda", LAM, "--rho", "6",
                       "--n", "80", "--replicas", "4")
    assert code == 1
    assert "SPHERTRUNC_SEED" in err


# ---------------------------------------------------------------------------
# tables

def test_tables_default_lists_all_orders(capsys):
    code, out, _ = run(capsys, "tables")
    assert code == 0
    payload = json.loads(out)
    assert set(payload["tables"]) == {"2", "3", "4"}
    t2 = payload["tables"]["2"]
    assert len(t2["structures"]) == 4
    assert all(s == "0" for s in t2["row_sums"])
    stored = GAMMA_TABLES[2]
    assert t2["gamma"] == [[str(g) for g in row] for row in stored.gamma]


def test_tables_csv_rows(capsys):
    code, out, _ = run(capsys, "tables", "--order", "2", "--format", "csv")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["order", "structure", "ratio", "gamma"]
    assert len(rows) == 4 * 5  # structures x ratio keys


def test_tables_verify_succeeds(capsys):
    code, out, err = run(capsys, "tables", "--verify", "--order", "2",
                         "--trials", "4")
    assert code == 0
    assert "matches exactly" in err
    assert json.loads(out)["verified"] == [2]


def test_tables_extract_reproduces_stored(capsys):
    code, out, _ = run(capsys, "tables", "--extract", "--order", "2",
                       "--trials", "4")
    assert code == 0
    payload = json.loads(out)
    got = payload["tables"]["2"]
    stored = GAMMA_TABLES[2]
    for i, row in enumerate(stored.gamma):
        for j, g in enumerate(row):
            label = stored.ratio_keys[j].label()
            jj = got["ratios"].index(label)
            assert got["gamma"][i][jj] == str(g)


def test_tables_verify_underdetermined_is_numeric_failure(capsys):
    code, _, err = run(capsys, "tables", "--verify", "--order", "4",
                       "--trials", "1")
    assert code == 2
    assert "numerical failure" in err


# ---------------------------------------------------------------------------
# detj / xi-scan

def test_detj_single_point(capsys):
    code, out, _ = run(capsys, "detj", "--v", "6", "--x", "3.0")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["x", "a", "b", "det", "lower_bound"]
    assert len(rows) == 1
    x, a, b, det, lb = map(float, rows[0])
    assert det == jacobian_det(6, 3.0)
    assert lb == jacobian_det_lower_bound(6, 3.0)
    assert 0.0 < lb <= det


def test_detj_grid(capsys):
    code, out, _ = run(capsys, "detj", "--v", "4", "--x-grid", "0.1:50:20")
    assert code == 0
    _, rows = parse_csv(out)
    assert len(rows) == 20
    xs = [float(r[0]) for r in rows]
    assert xs[0] == pytest.approx(0.1) and xs[-1] == pytest.approx(50.0)


def test_detj_needs_exactly_one_x_spec(capsys):
    code, _, err = run(capsys, "detj", "--v", "6")
    assert code == 1
    code2, _, _ = run(capsys, "detj", "--v", "6", "--x", "3", "--x-grid", "1:2:5")
    assert code2 == 1


def test_bad_grid_spec_is_domain_error(capsys):
    code, _, _ = run(capsys, "detj", "--v", "6", "--x-grid", "5:1:10")
    assert code == 1
    code2, _, _ = run(capsys, "detj", "--v", "6", "--x-grid", "1:5:10:weird")
    assert code2 == 1


def test_xi_scan_grid(capsys):
    code, out, err = run(capsys, "xi-scan", "--v", "6", "--x-grid", "1:100:25")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["x", "xi"]
    assert len(rows) == 25
    assert "min xi" in err
    vals = [float(r[1]) for r in rows]
    assert min(vals) >= -1e-12  # scanned slice of the positivity conjecture


def test_xi_scan_json(capsys):
    code, out, _ = run(capsys, "xi-scan", "--v", "5", "--x-grid",
                       "1:50:10:lin", "--format", "json")
    assert code == 0
    payload = json.loads(out)
    assert len(payload["x"]) == 10
    assert payload["min_xi"] == min(payload["xi"])


# ---------------------------------------------------------------------------
# oracle

def test_oracle_agrees_with_series(capsys):
    code, out, err = run(capsys, "oracle", "--rho", "6", "--lambda", LAM,
                         "--n-samples", "20000", "--seed", "0")
    assert code == 0
    payload = json.loads(out)
    assert abs(payload["alpha_z"]) < 5.0
    assert all(abs(z) < 5.0 for z in payload["alpha_k_z"])
    assert payload["n_samples"] == 20000


# ---------------------------------------------------------------------------
# exit codes and top-level behavior

def test_no_command_is_usage_error(capsys):
    assert main([]) == 64


def test_unknown_command_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["frobnicate"])
    assert exc.value.code == 64


def test_missing_required_argument_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["forward", "--lambda", LAM])  # --rho missing
    assert exc.value.code == 64


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert __version__ in capsys.readouterr().out
