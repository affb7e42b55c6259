import csv
import hashlib
import io
import json
import math

import numpy as np
import pytest

from magicmps.cli import main
from magicmps.ising import IsingParams, symmetric_msre_point
from magicmps.mps import save_mps
from magicmps.nonlocal_sre import random_imps
from magicmps.states import NamedState, closed_form_sre


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def csv_rows(text):
    records = list(csv.reader(io.StringIO(text)))
    header = records[0]
    return header, [dict(zip(header, rec)) for rec in records[1:]]


# ---------------------------------------------------------------------------
# exact and finite-sre


def test_exact_w_state_closed_equals_brute(capsys):
    code, out, _ = run(capsys, "exact", "--state", "w:n=5")
    assert code == 0
    header, rows = csv_rows(out)
    assert header == ["state", "n", "m2_closed", "m2_brute", "density", "upper_bound"]
    expected = 3 * math.log(5) - math.log(29)
    assert float(rows[0]["m2_closed"]) == pytest.approx(expected, abs=1e-10)
    assert float(rows[0]["m2_brute"]) == pytest.approx(expected, abs=1e-10)


def test_exact_product_state_is_free(capsys):
    code, out, _ = run(capsys, "exact", "--state", "product:theta=0,phi=0", "--n", "4")
    assert code == 0
    _, rows = csv_rows(out)
    assert float(rows[0]["m2_closed"]) == pytest.approx(0.0, abs=1e-12)


def test_exact_skips_brute_force_for_large_n(capsys):
    code, out, _ = run(capsys, "exact", "--state", "w:n=12")
    assert code == 0
    _, rows = csv_rows(out)
    assert rows[0]["m2_brute"] == ""
    assert float(rows[0]["m2_closed"]) > 0


def test_exact_rejects_unknown_kind(capsys):
    code, _, err = run(capsys, "exact", "--state", "foo:n=2")
    assert code == 2
    assert "unknown state kind" in err


def test_finite_sre_ghz_defaults_to_descriptor_length(capsys):
    code, out, _ = run(capsys, "finite-sre", "--state", "ghz:n=4,theta=0.6,phi=0.2")
    assert code == 0
    _, rows = csv_rows(out)
    assert rows[0]["n"] == "4"
    expected = closed_form_sre(NamedState(kind="ghz", n=4, theta=0.6, phi=0.2))
    assert float(rows[0]["m2"]) == pytest.approx(expected, abs=1e-9)


def test_finite_sre_random_ring(capsys):
    code, out, _ = run(capsys, "finite-sre", "--state", "random:chi=2,seed=7",
                       "--sites", "6")
    assert code == 0
    _, rows = csv_rows(out)
    assert rows[0]["boundary"] == "pbc"
    assert 0.0 < float(rows[0]["density"]) < float(rows[0]["upper_bound"])


# ---------------------------------------------------------------------------
# imps-sre engines


def test_imps_engines_agree(capsys):
    densities = {}
    for engine in ("dense", "pauli-imps", "bond-dmrg"):
        code, out, _ = run(capsys, "imps-sre", "--state", "random:chi=2,seed=7",
                           "--engine", engine)
        assert code == 0
        _, rows = csv_rows(out)
        densities[engine] = float(rows[0]["density_m2"])
    vals = list(densities.values())
    assert max(vals) - min(vals) < 1e-8


def test_imps_dense_rejects_large_chi(capsys):
    code, _, err = run(capsys, "imps-sre", "--state", "random:chi=4,seed=1",
                       "--engine", "dense")
    assert code == 3
    assert "chi=4" in err


def test_imps_from_file_roundtrip(tmp_path, capsys):
    path = tmp_path / "state.json"
    save_mps(random_imps(2, 3), path)
    code, out, _ = run(capsys, "imps-sre", "--state", f"file:{path}",
                       "--engine", "dense")
    assert code == 0
    _, rows = csv_rows(out)
    assert rows[0]["chi"] == "2"


def test_imps_malformed_file_is_a_parse_error(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text('{"not quite')
    code, _, err = run(capsys, "imps-sre", "--state", f"file:{path}",
                       "--engine", "dense")
    assert code == 2


# ---------------------------------------------------------------------------
# ensemble


def test_ensemble_requires_seed(capsys):
    code, _, err = run(capsys, "ensemble", "--chi", "2", "--samples", "3")
    assert code == 2
    assert "seed" in err


def test_ensemble_runs_are_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for path in (a, b):
        code, _, _ = run(capsys, "ensemble", "--chi", "2", "--samples", "3",
                         "--seed", "5", "--restarts", "2", "--out", str(path))
        assert code == 0
    assert a.read_bytes() == b.read_bytes()
    header, rows = csv_rows(a.read_text())
    assert header == ["sample_id", "chi", "seed", "m2", "m2_nonlocal",
                      "entropy", "log_flatness", "converged"]
    assert len(rows) == 3
    for row in rows:
        assert float(row["m2_nonlocal"]) <= float(row["m2"]) + 1e-9


def test_ensemble_config_file_with_flag_override(tmp_path, capsys):
    cfg = tmp_path / "ens.json"
    cfg.write_text(json.dumps({"chi": 2, "samples": 2, "seed": 9, "restarts": 1}))
    code, out, _ = run(capsys, "ensemble", "--config", str(cfg))
    assert code == 0
    _, rows = csv_rows(out)
    assert len(rows) == 2


# ---------------------------------------------------------------------------
# msre and the ising commands


def test_msre_curve_columns_and_decay(capsys):
    code, out, _ = run(capsys, "msre", "--state", "random:chi=2,seed=11",
                       "--r-max", "8")
    assert code == 0
    header, rows = csv_rows(out)
    assert header == ["r", "L", "L_M", "L_S", "predicted_L", "lambda1_abs", "xi"]
    assert len(rows) == 9
    lam = float(rows[0]["lambda1_abs"])
    assert 0 < lam < 1
    assert abs(float(rows[8]["L"])) < abs(float(rows[0]["L"]))


def test_msre_rejects_degenerate_transfer_spectrum(capsys):
    # a GHZ ring is non-injective: |λ1| = 1 and the constants are undefined
    code, _, err = run(capsys, "msre", "--state", "ghz:n=2,theta=0.5,phi=0.1")
    assert code == 3


def test_ising_sweep_config_validation(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps({"hx_min": 1.0, "step": 0.1}))
    code, _, err = run(capsys, "ising-sweep", "--config", str(cfg))
    assert code == 2
    assert "hx_max" in err


def test_ising_sweep_single_point(tmp_path, capsys):
    cfg = tmp_path / "sweep.json"
    cfg.write_text(json.dumps(
        {"hx_min": 1.4, "hx_max": 1.4, "step": 0.01, "chi": 4, "kappa": 24}
    ))
    code, out, _ = run(capsys, "ising-sweep", "--config", str(cfg))
    assert code == 0
    header, rows = csv_rows(out)
    assert header[:3] == ["hx", "chi", "density_m2"]
    assert len(rows) == 1
    assert 0 < float(rows[0]["density_m2"]) < math.log(2)


def test_ising_oracle_matches_library(capsys):
    code, out, _ = run(capsys, "ising-oracle", "--hx", "1.5", "--r-max", "3")
    assert code == 0
    _, rows = csv_rows(out)
    assert len(rows) == 4
    direct = symmetric_msre_point(IsingParams(hx=1.5), separation=2)
    assert float(rows[2]["L"]) == pytest.approx(direct.total, abs=1e-12)


# ---------------------------------------------------------------------------
# manifests and environment


def test_manifest_records_digest_and_seed(tmp_path, capsys):
    out_file = tmp_path / "ens.csv"
    code, _, _ = run(capsys, "ensemble", "--chi", "2", "--samples", "2",
                     "--seed", "3", "--restarts", "1", "--out", str(out_file))
    assert code == 0
    manifest = json.loads((tmp_path / "ens.csv.manifest.json").read_text())
    assert manifest["seed"] == 3
    assert manifest["outputs"][0]["sha256"] == hashlib.sha256(
        out_file.read_bytes()
    ).hexdigest()
    assert "magicmps" in manifest["versions"]


def test_thread_cap_env_is_validated(capsys, monkeypatch):
    monkeypatch.setenv("MAGICMPS_THREADS", "zero")
    code, _, err = run(capsys, "exact", "--state", "w:n=3")
    assert code == 2
    assert "MAGICMPS_THREADS" in err
    monkeypatch.setenv("MAGICMPS_THREADS", "2")
    code, _, _ = run(capsys, "exact", "--state", "w:n=3")
    assert code == 0


def test_unknown_flag_is_a_parse_error(capsys):
    code, _, err = run(capsys, "exact", "--state", "w:n=3", "--frobnicate")
    assert code == 2
