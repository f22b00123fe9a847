"""End-to-end command-line interface tests (CSV schemas, exit codes, plots)."""

import json

import numpy as np
import pytest

from mrhydro.cli import main


def read_csv(path):
    """Header comment lines, column names, and a float data matrix."""
    header, columns, rows = [], None, []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.startswith("#"):
                header.append(line)
            elif columns is None:
                columns = line.split(",")
            else:
                rows.append(line.split(","))
    return header, columns, rows


def as_floats(rows, col_idx):
    return np.array([float(r[col_idx]) for r in rows])


def run_cli(tmp_path, *args):
    import os
    cwd = os.getcwd()
    os.chdir(tmp_path)
    try:
        return main(list(args))
    finally:
        os.chdir(cwd)


# -- config handling -----------------------------------------------------------

def test_missing_config_exits_2_without_output(tmp_path):
    code = run_cli(tmp_path, "bandwidth", "--config", "does-not-exist.cfg",
                   "--out", "bw.csv")
    assert code == 2
    assert not (tmp_path / "bw.csv").exists()


def test_bad_config_key_exits_2(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("m9 = 1.0\n")
    assert run_cli(tmp_path, "bandwidth", "--config", str(cfg)) == 2


def test_env_var_config_used(tmp_path, monkeypatch):
    cfg = tmp_path / "env.cfg"
    cfg.write_text("K_I = 55.5\n")
    monkeypatch.setenv("MRHYDRO_CONFIG", str(cfg))
    assert run_cli(tmp_path, "bandwidth", "--out", "bw.csv") == 0
    header, _, _ = read_csv(tmp_path / "bw.csv")
    assert any("K_I=55.5" in line for line in header)


# -- analysis commands -----------------------------------------------------------

def test_bode_both_candidates(tmp_path):
    code = run_cli(tmp_path, "bode", "--tf", "both", "--load", "blocked",
                   "--points", "60", "--out", "bode.csv")
    assert code == 0
    for name in ("hf", "hp"):
        header, columns, rows = read_csv(tmp_path / f"bode_{name}.csv")
        assert columns == ["freq_hz", "mag_db", "phase_deg"]
        assert len(rows) == 60
        assert any(line.startswith("# run_id:") for line in header)
        assert abs(as_floats(rows, 1)[0]) < 0.05  # DC row ~ 0 dB
    assert (tmp_path / "bode.png").exists()
    assert (tmp_path / "bode.manifest.json").exists()


def test_bode_single_candidate_and_no_plot(tmp_path):
    code = run_cli(tmp_path, "bode", "--tf", "hf", "--points", "30",
                   "--no-plot", "--out", "single.csv")
    assert code == 0
    assert (tmp_path / "single.csv").exists()
    assert not (tmp_path / "single.png").exists()


def test_bode_deterministic_bytes(tmp_path):
    for sub in ("a", "b"):
        (tmp_path / sub).mkdir()
        assert run_cli(tmp_path / sub, "bode", "--tf", "hp", "--points", "40",
                       "--no-plot", "--out", "t.csv") == 0
    assert ((tmp_path / "a" / "t.csv").read_bytes()
            == (tmp_path / "b" / "t.csv").read_bytes())


def test_bandwidth_prints_both(tmp_path, capsys):
    assert run_cli(tmp_path, "bandwidth", "--load", "blocked",
                   "--out", "bw.csv") == 0
    out = capsys.readouterr().out
    assert "hf" in out and "hp" in out and "Hz" in out
    _, columns, rows = read_csv(tmp_path / "bw.csv")
    assert columns == ["candidate", "load", "bandwidth_hz"]
    values = {r[0]: float(r[2]) for r in rows}
    assert values["hf"] == pytest.approx(19.14, abs=0.05)
    assert values["hp"] == pytest.approx(33.06, abs=0.05)


def test_poles_all_left_half_plane(tmp_path):
    assert run_cli(tmp_path, "poles", "--load", "compliant",
                   "--out", "poles.csv") == 0
    _, columns, rows = read_csv(tmp_path / "poles.csv")
    assert columns == ["candidate", "kind", "re", "im"]
    pole_rows = [r for r in rows if r[1] == "pole"]
    assert len(pole_rows) == 14  # 7 per candidate
    assert all(float(r[2]) < 0 for r in pole_rows)


def test_rootlocus_trace(tmp_path):
    assert run_cli(tmp_path, "rootlocus", "--loop", "pressure",
                   "--points", "25", "--out", "rl.csv") == 0
    _, columns, rows = read_csv(tmp_path / "rl.csv")
    assert columns == ["gain", "pole_re", "pole_im"]
    assert len(rows) == 25 * 7
    gains = as_floats(rows, 0)
    assert np.all(np.diff(np.unique(gains)) > 0)


def test_derive_params_summary(tmp_path, capsys):
    assert run_cli(tmp_path, "derive-params", "--hose-length", "1.0",
                   "--hose-diameter", "0.0095", "--out", "derived.csv") == 0
    out = capsys.readouterr().out
    assert "9.625" in out or "9.63" in out
    _, _, rows = read_csv(tmp_path / "derived.csv")
    values = {r[0]: float(r[1]) for r in rows}
    assert values["reflected_hydraulic_mass_kg"] == pytest.approx(9.6255, abs=1e-3)


def test_frf_csv_schema(tmp_path):
    assert run_cli(tmp_path, "frf", "--channel", "force", "--duration", "20",
                   "--f1", "60", "--out", "frf.csv") == 0
    _, columns, rows = read_csv(tmp_path / "frf.csv")
    assert columns == ["freq_hz", "est_mag_db", "est_phase_deg",
                       "model_mag_db", "model_phase_deg"]
    est = as_floats(rows, 1)
    model = as_floats(rows, 3)
    assert np.max(np.abs(est - model)) < 3.0  # coarse sweep, dB scale


# -- simulation commands -----------------------------------------------------------

def test_simulate_step_steady_state(tmp_path):
    assert run_cli(tmp_path, "simulate", "--controller", "open",
                   "--signal", "step", "--duration", "3",
                   "--out", "sim.csv") == 0
    _, columns, rows = read_csv(tmp_path / "sim.csv")
    assert columns[:6] == ["t_s", "reference_n", "current_a", "clutch_force_n",
                           "pressure_n", "force_n"]
    final_force = float(rows[-1][5])
    assert final_force == pytest.approx(250.0, rel=1e-3)
    assert (tmp_path / "sim_metrics.csv").exists()
    manifest = json.loads((tmp_path / "sim.manifest.json").read_text())
    assert str(tmp_path / "sim.csv") in manifest["outputs"] or "sim.csv" in manifest["outputs"]


def test_simulate_drill_reports_peak_deviation(tmp_path, capsys):
    assert run_cli(tmp_path, "simulate", "--controller", "force-pi",
                   "--signal", "drill", "--duration", "8",
                   "--out", "drill.csv") == 0
    out = capsys.readouterr().out
    assert "peak_deviation_n" in out
    _, _, rows = read_csv(tmp_path / "drill_metrics.csv")
    values = {r[0]: float(r[1]) for r in rows}
    assert "peak_deviation_n" in values


def test_simulate_partial_gains_rejected(tmp_path):
    assert run_cli(tmp_path, "simulate", "--controller", "force-pi",
                   "--signal", "step", "--kp", "0.01") == 2


def test_compare_rise_time_ordering(tmp_path, capsys):
    assert run_cli(tmp_path, "compare", "--signal", "mixed",
                   "--out", "cmp.csv") == 0
    _, columns, rows = read_csv(tmp_path / "cmp_metrics.csv")
    assert columns[0] == "controller"
    rises = {r[0]: float(r[1]) for r in rows}
    assert rises["force-pi"] < rises["pressure-pi"] < rises["open"]
    for name in ("open", "force-pi", "pressure-pi"):
        assert (tmp_path / f"cmp_{name}.csv").exists()
    assert (tmp_path / "cmp.png").exists()


def test_compare_requires_compliant_load(tmp_path):
    assert run_cli(tmp_path, "compare", "--load", "blocked") == 2
