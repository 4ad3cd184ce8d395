"""Command-line harness: reports, config handling, exit codes, outputs."""

import json
import math
import subprocess
import sys

import pytest

from pivotal_lab.cli import main

DYNAMICS_HEADER = "family,k,l,n,semantics,duration,trials,p_c0,stderr,mean_C,q50,q90,seed"


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def parse_csv(text):
    lines = [ln for ln in text.strip().splitlines() if not ln.startswith("#")]
    header = lines[0].split(",")
    return header, [dict(zip(header, ln.split(","))) for ln in lines[1:]]


# --- exact reports -----------------------------------------------------------


def test_pivotal_law_contains_blocked_probability(capsys):
    code, out, _ = run_cli(
        capsys, "exact", "--family", "tribes", "--l", "2", "--k", "2",
        "--report", "pivotal-law",
    )
    assert code == 0
    _, rows = parse_csv(out)
    blocked = [r for r in rows if r["value"] == "0" and r["size"] == "any"]
    assert len(blocked) == 1
    assert float(blocked[0]["probability"]) == 0.5625


def test_spectrum_majority3_has_four_coefficients(capsys):
    code, out, _ = run_cli(
        capsys, "exact", "--family", "majority", "--n", "3", "--report", "spectrum"
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert len(rows) == 4
    assert {r["mask"] for r in rows} == {"0x1", "0x2", "0x4", "0x7"}
    assert all(abs(float(r["coefficient"])) == 0.5 for r in rows)


def test_exact_over_cap_is_a_usage_error(capsys):
    code, _, err = run_cli(capsys, "exact", "--family", "tribes", "--l", "5", "--k", "5")
    assert code == 2
    assert "usage error" in err
    assert "24" in err  # the cap value is part of the message


def test_exact_disagreement_report(capsys):
    code, out, _ = run_cli(
        capsys, "exact", "--family", "majority", "--n", "3",
        "--report", "disagreement", "--epsilon", "0.2",
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[0]["disagreement"]) == pytest.approx(0.136, abs=1e-12)


def test_exact_disagreement_needs_epsilon(capsys):
    code, _, err = run_cli(
        capsys, "exact", "--family", "majority", "--n", "3", "--report", "disagreement"
    )
    assert code == 2 and "epsilon" in err


def test_exact_prob_report_ternary(capsys):
    code, out, _ = run_cli(
        capsys, "exact", "--family", "bribable", "--k", "2", "--l", "2",
        "--report", "prob",
    )
    assert code == 0
    _, rows = parse_csv(out)
    by_value = {r["value"]: float(r["probability"]) for r in rows}
    assert by_value["0"] == 0.375
    assert by_value["-1"] == by_value["1"] == pytest.approx(0.3125, abs=1e-15)


def test_exact_needs_family(capsys):
    code, _, err = run_cli(capsys, "exact", "--report", "summary")
    assert code == 2 and "family" in err


# --- mc ------------------------------------------------------------------------


def test_mc_zero_noise_disagreement_is_zero(capsys):
    code, out, _ = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3", "--quantity", "disagreement",
        "--epsilon", "0", "--samples", "500",
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[0]["estimate"]) == 0.0
    assert rows[0]["quantity"] == "disagreement"
    assert int(rows[0]["n_samples"]) == 500


def test_mc_output_independent_of_thread_count(tmp_path, capsys):
    out1, out8 = tmp_path / "t1.csv", tmp_path / "t8.csv"
    common = [
        "mc", "--family", "bribable", "--k", "2", "--l", "2",
        "--quantity", "tribes-stats", "--samples", "20000", "--seed", "99",
    ]
    assert main(common + ["--threads", "1", "--out", str(out1)]) == 0
    assert main(common + ["--threads", "8", "--out", str(out8)]) == 0
    capsys.readouterr()
    assert out1.read_bytes() == out8.read_bytes()


def test_mc_p_f_zero_matches_exact_small_layout(capsys):
    code, out, _ = run_cli(
        capsys, "mc", "--family", "bribable", "--k", "2", "--l", "2",
        "--quantity", "p-f-zero", "--samples", "5000",
    )
    assert code == 0
    _, rows = parse_csv(out)
    est, se = float(rows[0]["estimate"]), float(rows[0]["stderr"])
    assert abs(est - 0.375) <= 4 * se


def test_mc_u_tail_requires_thresholds(capsys):
    code, _, err = run_cli(
        capsys, "mc", "--family", "bribable", "--k", "2", "--l", "2",
        "--quantity", "u-tail", "--samples", "100",
    )
    assert code == 2 and "thresholds" in err


def test_mc_u_tail_rows(capsys):
    code, out, _ = run_cli(
        capsys, "mc", "--family", "bribable", "--k", "3", "--l", "2",
        "--quantity", "u-tail", "--thresholds", "0,1", "--samples", "2000",
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert [r["quantity"] for r in rows] == ["u-tail-0", "u-tail-1"]
    assert float(rows[0]["estimate"]) >= float(rows[1]["estimate"])


def test_mc_pivotal_count_histogram_rows(capsys):
    code, out, _ = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3",
        "--quantity", "pivotal-count", "--samples", "2000",
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert rows[0]["quantity"] == "mean-pivotal-size"
    shares = [float(r["estimate"]) for r in rows if r["quantity"].startswith("p-size-")]
    assert sum(shares) == pytest.approx(1.0, abs=1e-12)


def test_mc_sandwich_rows(capsys):
    code, out, _ = run_cli(
        capsys, "mc", "--family", "bribed", "--k", "2", "--l", "2",
        "--quantity", "sandwich", "--epsilon", "0.3", "--samples", "3000",
    )
    assert code == 0
    _, rows = parse_csv(out)
    names = [r["quantity"] for r in rows]
    assert names == ["p-bribed-diff", "p-majority-diff", "p-ternary-active", "sandwich-holds"]
    assert float(rows[-1]["estimate"]) == 1.0


def test_mc_tribes_quantities_need_k(capsys):
    code, _, err = run_cli(capsys, "mc", "--quantity", "p-f-zero")
    assert code == 2 and "--k" in err


# --- dynamics --------------------------------------------------------------------


def test_dynamics_header_and_constant_family(capsys):
    code, out, _ = run_cli(
        capsys, "dynamics", "--family", "constant", "--n", "5", "--trials", "100",
    )
    assert code == 0
    header, rows = parse_csv(out)
    assert ",".join(header) == DYNAMICS_HEADER
    assert float(rows[0]["p_c0"]) == 1.0
    assert float(rows[0]["mean_C"]) == 0.0


def test_dynamics_flip_with_bias_refused(capsys):
    code, _, err = run_cli(
        capsys, "dynamics", "--family", "parity", "--n", "4",
        "--semantics", "flip", "--p", "0.3", "--trials", "10",
    )
    assert code == 2 and "flip" in err


def test_dynamics_k_list_resolves_l_from_schedule(capsys):
    code, out, _ = run_cli(
        capsys, "dynamics", "--family", "bribed", "--k-list", "4,8",
        "--trials", "20", "--duration", "0.5",
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert [(r["k"], r["l"], r["n"]) for r in rows] == [("4", "3", "12"), ("8", "4", "32")]


def test_dynamics_dictator_survival(capsys):
    code, out, _ = run_cli(
        capsys, "dynamics", "--family", "dictator", "--n", "1", "--trials", "3000",
    )
    assert code == 0
    _, rows = parse_csv(out)
    est, se = float(rows[0]["p_c0"]), float(rows[0]["stderr"])
    assert abs(est - math.exp(-1.0)) <= 4 * se


# --- schedule ----------------------------------------------------------------------


def test_schedule_csv_columns(capsys):
    code, out, _ = run_cli(capsys, "schedule", "--j-range", "3:5")
    assert code == 0
    header, rows = parse_csv(out)
    assert header == ["n_index", "k", "l", "q0", "mu", "a_n"]
    assert [r["k"] for r in rows] == ["8", "16", "32"]
    assert [r["n_index"] for r in rows] == ["0", "1", "2"]


def test_schedule_json_carries_flags(capsys):
    code, out, _ = run_cli(
        capsys, "schedule", "--j-range", "16:17", "--format", "json"
    )
    assert code == 0
    payload = json.loads(out)
    rows = payload["rows"]
    assert rows[0]["flags"] == []
    assert "mu-not-increasing" in rows[1]["flags"]


def test_schedule_needs_some_range(capsys):
    code, _, err = run_cli(capsys, "schedule")
    assert code == 2 and "k-list" in err


# --- config files and outputs --------------------------------------------------------


def test_config_file_fills_defaults_flags_win(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"epsilon": 0.5, "samples": 400}))
    code, out, _ = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3", "--quantity", "disagreement",
        "--config", str(cfg), "--epsilon", "0.2",
    )
    assert code == 0
    _, rows = parse_csv(out)
    assert float(rows[0]["epsilon"]) == 0.2  # explicit flag beats the file
    assert int(rows[0]["n_samples"]) == 400  # file beats the hard default


def test_config_unknown_keys_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"samples": 10, "bogus": 1}))
    code, _, err = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3", "--quantity", "disagreement",
        "--epsilon", "0.1", "--config", str(cfg),
    )
    assert code == 2 and "bogus" in err


def test_config_file_must_be_json_object(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text("[1, 2]")
    code, _, err = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3", "--config", str(cfg)
    )
    assert code == 2 and "object" in err


def test_csv_output_carries_version_seed_and_config_hash(tmp_path, capsys):
    out = tmp_path / "table.csv"
    code, _, _ = run_cli(
        capsys, "schedule", "--j-range", "3:4", "--out", str(out)
    )
    assert code == 0
    first = out.read_text().splitlines()[0]
    assert first.startswith("# pivotal-lab 0.1.0 seed=")
    assert "config=" in first
    assert out.read_bytes().count(b"\r") == 0  # LF endings only


def test_json_output_autodetected_from_suffix(tmp_path, capsys):
    out = tmp_path / "est.json"
    code, _, _ = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3", "--quantity", "disagreement",
        "--epsilon", "0.1", "--samples", "200", "--out", str(out),
    )
    assert code == 0
    payload = json.loads(out.read_text())
    assert "meta" in payload and "rows" in payload
    assert payload["rows"][0]["quantity"] == "disagreement"


def test_threads_env_fallback(tmp_path, capsys, monkeypatch):
    monkeypatch.setenv("PIVOTAL_LAB_THREADS", "2")
    code, _, _ = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3", "--quantity", "disagreement",
        "--epsilon", "0.1", "--samples", "200",
    )
    assert code == 0
    monkeypatch.setenv("PIVOTAL_LAB_THREADS", "junk")
    code, _, err = run_cli(
        capsys, "mc", "--family", "majority", "--n", "3", "--quantity", "disagreement",
        "--epsilon", "0.1", "--samples", "200",
    )
    assert code == 2 and "PIVOTAL_LAB_THREADS" in err


# --- reproduce -----------------------------------------------------------------------


def test_reproduce_marginals_writes_verdict(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "reproduce", "marginals", "--out-dir", str(tmp_path)
    )
    assert code == 0
    assert "[PASS]" in out and "=> PASS" in out
    verdict = json.loads((tmp_path / "marginals_verdict.json").read_text())
    assert verdict["passed"] is True
    assert all(c["passed"] for c in verdict["checks"])
    assert (tmp_path / "marginals.csv").exists()


def test_reproduce_negative_control_fails_named_check(tmp_path, capsys):
    cfg = tmp_path / "override.json"
    cfg.write_text(json.dumps({
        "family": "constant",
        "j_values": [4, 5],
        "sweep_trials": 200,
        "calibration_trials": 1500,
        "bound_trials": 150,
        "bound_samples": 1500,
    }))
    code, out, _ = run_cli(
        capsys, "reproduce", "volatility", "--config", str(cfg),
    )
    assert code == 1
    assert "[FAIL] sweep-p-c0-decreasing" in out


def test_reproduce_unknown_override_rejected(tmp_path, capsys):
    cfg = tmp_path / "override.json"
    cfg.write_text(json.dumps({"no_such_knob": 3}))
    code, _, err = run_cli(capsys, "reproduce", "bribable", "--config", str(cfg))
    assert code == 2 and "no_such_knob" in err


def test_console_entry_point_is_installed():
    proc = subprocess.run(
        [sys.executable, "-m", "pivotal_lab.cli", "schedule", "--j-range", "3:4"],
        capture_output=True, text=True, timeout=120,
    )
    assert proc.returncode == 0
    assert proc.stdout.startswith("n_index,k,l,q0,mu,a_n")
