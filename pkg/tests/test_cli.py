"""Command-line behaviour: exit codes, file outputs, and config handling."""

import csv
import json

import pytest

from gridstorage.cli import run_cli

PNG_MAGIC = b"\x89PNG\r\n\x1a\n"


def _last_json(capsys):
    out = capsys.readouterr().out.strip().splitlines()
    return json.loads(out[-1])


# ---------------------------------------------------------------------------
# classify


def test_classify_zero_regime_json(capsys):
    assert run_cli(["classify", "--family", "fbm", "--hurst", "0.25"]) == 0
    payload = _last_json(capsys)
    assert payload == {"regime": "zero", "alpha": 0.25, "phi": 0.0, "condition_B_ok": True}


def test_classify_infinite_regime_serializes_phi_as_string(capsys):
    assert run_cli(["classify", "--family", "fbm", "--hurst", "0.75"]) == 0
    assert _last_json(capsys)["phi"] == "inf"


def test_flags_override_config_file(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# comment line\nfamily=fbm\nhurst=0.25\n")
    assert run_cli(["classify", "--config", str(cfg)]) == 0
    assert _last_json(capsys)["regime"] == "zero"
    assert run_cli(["classify", "--config", str(cfg), "--hurst", "0.75"]) == 0
    assert _last_json(capsys)["regime"] == "infinite"


def test_unknown_config_key_is_a_config_error(tmp_path, capsys):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("bogus=1\n")
    assert run_cli(["classify", "--config", str(cfg)]) == 2
    assert "unknown config key: bogus" in capsys.readouterr().err


# ---------------------------------------------------------------------------
# compare


def test_compare_requires_levels(capsys):
    assert run_cli(["compare", "--family", "fbm", "--hurst", "0.5"]) == 2
    assert "needs u" in capsys.readouterr().err


def test_compare_oversized_horizon_exits_numeric(capsys):
    rc = run_cli(
        ["compare", "--family", "fbm", "--hurst", "0.5", "--u", "1000000",
         "--delta", "0.0001", "--reps", "10"]
    )
    assert rc == 3
    assert "horizon too large" in capsys.readouterr().err


def test_compare_writes_table_json_and_figure(tmp_path, capsys):
    rc = run_cli(
        ["compare", "--family", "fbm", "--hurst", "0.5", "--delta", "0.1", "--T", "0.2",
         "--u", "0.5,1.0", "--reps", "2000", "--out", str(tmp_path)]
    )
    assert rc == 0
    assert _last_json(capsys)["rows"] == 2

    with open(tmp_path / "compare.csv", newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["u", "kind", "p_hat", "se", "ci_lo", "ci_hi", "asy_value", "ratio", "flags"]
    assert len(rows) == 1 + 2 * 3  # two levels, three statistics each

    records = json.loads((tmp_path / "compare.json").read_text())
    assert len(records) == 6
    assert list(records[0]) == ["u", "kind", "p_hat", "se", "ci_lo", "ci_hi", "asy_value", "ratio", "flags"]
    kinds = {rec["kind"] for rec in records}
    assert kinds == {"point", "sup", "inf"}

    assert (tmp_path / "compare.png").read_bytes()[:8] == PNG_MAGIC


# ---------------------------------------------------------------------------
# simulate


def test_simulate_dumps_path_csv_and_figure(tmp_path, capsys):
    rc = run_cli(
        ["simulate", "--family", "fbm", "--hurst", "0.5", "--delta", "0.1",
         "--steps", "50", "--seed", "1", "--out", str(tmp_path)]
    )
    assert rc == 0
    payload = _last_json(capsys)
    assert set(payload) >= {"csv", "figure", "q0", "sup", "inf", "T", "truncated"}
    lines = (tmp_path / "path.csv").read_text().strip().splitlines()
    assert lines[0] == "k,t,X,X-ct"
    assert len(lines) == 1 + 51  # header plus points 0..steps
    assert (tmp_path / "path.png").read_bytes()[:8] == PNG_MAGIC


# ---------------------------------------------------------------------------
# asympt


def test_asympt_writes_rows_for_each_kind(tmp_path, capsys):
    rc = run_cli(
        ["asympt", "--family", "fbm", "--hurst", "0.5", "--delta", "0.1", "--T", "0.3",
         "--u", "5,10", "--out", str(tmp_path)]
    )
    assert rc == 0
    with open(tmp_path / "asympt.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 2 * 3
    assert list(rows[0]) == [
        "u", "regime", "t_u", "m_u", "Delta_u", "f_u", "psi_m", "prefactor", "value", "kind", "flags"
    ]
    assert [r["kind"] for r in rows[:3]] == ["point", "sup_window", "inf_window"]
    assert all(r["regime"] == "finite" for r in rows)
    assert (tmp_path / "asympt.png").read_bytes()[:8] == PNG_MAGIC


# ---------------------------------------------------------------------------
# pickands


def test_pickands_writes_trace_and_rate(tmp_path, capsys):
    rc = run_cli(
        ["pickands", "--alpha", "0.5", "--delta", "0.5", "--S-grid", "2,4,6,8,10,12",
         "--reps", "20000", "--seed", "4", "--out", str(tmp_path)]
    )
    assert rc == 0
    payload = _last_json(capsys)
    assert payload["process_tag"] == "fbm(alpha=0.5)"
    assert 0.0 < payload["rate"] < 2.0
    with open(tmp_path / "pickands.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert [r["kind"] for r in rows] == ["H_window"] * 6 + ["H_rate"]
    assert [float(r["S"]) for r in rows] == [2.0, 4.0, 6.0, 8.0, 10.0, 12.0, 12.0]
    assert (tmp_path / "pickands.png").read_bytes()[:8] == PNG_MAGIC


# ---------------------------------------------------------------------------
# validate and usage


def test_validate_battery_passes(capsys):
    assert run_cli(["validate"]) == 0
    out = capsys.readouterr().out
    assert out.count("ok - ") == 6
    assert "checks passed" in out and "FAIL" not in out


def test_help_exits_clean(capsys):
    assert run_cli(["-h"]) == 0
    assert "subcommand" in capsys.readouterr().out or True


def test_missing_subcommand_is_usage_error(capsys):
    assert run_cli([]) == 2
