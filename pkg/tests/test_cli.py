"""Command-line interface: subcommands, overrides, exit codes."""

import numpy as np
import pytest

from photonsync import cli


def run_cli(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_model_prints_rates(capsys):
    code, out, _ = run_cli(capsys, "model")
    assert code == 0
    assert "r_sync" in out and "zeta" in out and "downtime" in out


def test_model_set_override(capsys):
    code, out, _ = run_cli(capsys, "model", "--set", "source.r1_cps=440000",
                           "--set", "source.rho=0.1")
    assert code == 0
    r_stoc = float([l for l in out.splitlines()
                    if l.startswith("r_stoc")][0].split()[1])
    assert r_stoc == pytest.approx(112.7, abs=0.2)


def test_model_sweep_csv(capsys, tmp_path):
    out_path = tmp_path / "sweep.csv"
    code, _, _ = run_cli(capsys, "model",
                         "--sweep", "source.r1_cps=50000:440000:4",
                         "--out", str(out_path))
    assert code == 0
    lines = out_path.read_text().splitlines()
    assert lines[0].startswith("source.r1_cps,")
    assert len(lines) == 5
    # r_stoc scales as r1*r2 and must grow along the sweep
    col = lines[0].split(",").index("r_stoc")
    values = [float(l.split(",")[col]) for l in lines[1:]]
    assert values == sorted(values)


def test_simulate_analyze_roundtrip(capsys, tmp_path):
    base = str(tmp_path / "run")
    code, out, _ = run_cli(capsys, "simulate", "--seed", "5",
                           "--duration", "0.5", "--out", base)
    assert code == 0
    assert "digest" in out
    code, out, _ = run_cli(capsys, "analyze", base,
                           "--out", str(tmp_path / "metrics.csv"))
    assert code == 0
    assert "r_trig2" in out
    header = (tmp_path / "metrics.csv").read_text().splitlines()[0]
    assert header == "metric,value,stderr"


def test_simulate_csv_format(capsys, tmp_path):
    base = str(tmp_path / "run")
    code, _, _ = run_cli(capsys, "simulate", "--seed", "5",
                         "--duration", "0.2", "--out", base,
                         "--format", "csv")
    assert code == 0
    assert (tmp_path / "run.csv").exists()


def test_config_error_exit_code(capsys):
    code, _, err = run_cli(capsys, "model", "--set", "no.such.key=1")
    assert code == 2
    assert "unknown config key" in err


def test_bad_sweep_spec_exit_code(capsys):
    code, _, err = run_cli(capsys, "model", "--sweep", "source.r1_cps=bad")
    assert code == 2


def test_missing_record_exit_code(capsys, tmp_path):
    code, _, err = run_cli(capsys, "analyze", str(tmp_path / "missing"))
    assert code == 3


def test_corrupt_record_exit_code(capsys, tmp_path):
    base = str(tmp_path / "run")
    run_cli(capsys, "simulate", "--seed", "5", "--duration", "0.2",
            "--out", base)
    path = tmp_path / "run.ptag"
    data = bytearray(path.read_bytes())
    data[0] ^= 0xFF
    path.write_bytes(bytes(data))
    code, _, err = run_cli(capsys, "analyze", base)
    assert code == 3
    assert "magic" in err


def test_reproduce_skip_mc_exit_code(capsys):
    code, out, _ = run_cli(capsys, "reproduce", "--skip-mc",
                           "--criteria", "4", "6")
    assert code == 0
    assert "[PASS]" in out
    assert "criterion 4" in out and "criterion 6" in out
