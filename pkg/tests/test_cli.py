import json

import numpy as np
import pytest

from qlangevin.cli import main
from qlangevin.core import ComplexSpectrum, spectrum_from_csv, spectrum_to_csv


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_response_writes_spectra_and_summary(tmp_path, capsys):
    code, out, _ = run(capsys, "response", "--model", "resonance:1.0", "--temp", 0.2, "--grid", "0.05:100",
                       "--out", tmp_path)
    assert code == 0
    for name in ("chi_T.csv", "xi_T.csv", "c_ff.csv", "summary.json"):
        assert (tmp_path / name).exists()
    header = (tmp_path / "xi_T.csv").read_text().splitlines()[:12]
    assert any("hbar = k_B = c = 1" in line for line in header)
    assert any(line.startswith("# version:") for line in header)
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["metadata"]["params"]["model"] == "resonance:1.0"
    assert summary["quasistatic"]["friction"] == pytest.approx(0.068930163, rel=1e-7)
    xi = spectrum_from_csv(tmp_path / "xi_T.csv")
    assert xi.grid.half_count == 100


def test_response_perfect_reflector_diffusion(tmp_path, capsys):
    code, out, _ = run(capsys, "response", "--model", "perfect", "--temp", 1.0, "--grid", "0.1:20", "--out", tmp_path)
    assert code == 0
    assert json.loads(out)["momentum_diffusion"] == pytest.approx(2 * np.pi / 3, rel=1e-12)


def test_missing_model_is_a_usage_error(tmp_path, capsys):
    code, _, err = run(capsys, "response", "--temp", 1.0, "--out", tmp_path)
    assert code == 1 and "--model" in err


@pytest.mark.parametrize("argv", [
    ["response", "--model", "mirror", "--temp", "1"],
    ["response", "--model", "perfect", "--grid", "0.1"],
    ["response", "--model", "perfect", "--temp", "-1"],
    ["stability", "--abraham-lorentz", "Q=1"],
    ["nonsense"],
    [],
])
def test_bad_input_exits_with_one(tmp_path, capsys, argv):
    code, _, _ = run(capsys, *argv, *(["--out", tmp_path] if argv and argv[0] == "response" else []))
    assert code == 1


def test_config_file_and_flag_override(tmp_path, capsys):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"model": "perfect", "temp": 1.0, "grid": "0.1:20", "out": str(tmp_path)}))
    code, out, _ = run(capsys, "response", "--config", cfg, "--temp", 0.5)
    assert code == 0
    assert json.loads(out)["momentum_diffusion"] == pytest.approx(2 * np.pi * 0.125 / 3)
    cfg.write_text(json.dumps({"model": "perfect", "colour": "red"}))
    code, _, err = run(capsys, "response", "--config", cfg)
    assert code == 1 and "colour" in err


def test_kk_passes_for_resonance_model(tmp_path, capsys):
    code, out, _ = run(capsys, "kk", "--model", "resonance:1.0", "--temp", 0.2, "--out", tmp_path)
    report = json.loads(out)
    assert code == 0, report
    assert all(v <= 1e-4 for v in report["residuals"].values())
    assert (tmp_path / "kk_report.json").exists()


def test_kk_flags_a_corrupted_spectrum(tmp_path, capsys):
    assert run(capsys, "response", "--model", "resonance:1.0", "--temp", 0.2, "--grid", "0.05:1000",
               "--out", tmp_path)[0] == 0
    xi = spectrum_from_csv(tmp_path / "xi_T.csv")
    v = xi.values.copy()
    v[1200] *= 1.5
    v[800] *= 1.5
    spectrum_to_csv(ComplexSpectrum(xi.grid, v), tmp_path / "bad.csv")
    code, out, _ = run(capsys, "kk", "--model", "resonance:1.0", "--temp", 0.2, "--grid", "0.05:1000",
                       "--xi", tmp_path / "bad.csv", "--out", tmp_path)
    report = json.loads(out)
    assert code == 4
    assert "fdt" in report["failed"]


def test_kk_perfect_reflector_mass_diverges(tmp_path, capsys):
    code, out, _ = run(capsys, "kk", "--model", "perfect", "--temp", 0.5, "--grid", "0.05:400", "--induced-mass",
                       "--out", tmp_path)
    assert code == 3
    assert "divergence" in json.loads(out)["induced_mass_error"]


def test_stability_abraham_lorentz(capsys):
    code, out, _ = run(capsys, "stability", "--abraham-lorentz", "M=1", "e2=1", "K=0")
    doc = json.loads(out)
    assert code == 0
    assert doc["class"] == "runaway"
    assert doc["poles"][0]["im"] == pytest.approx(1.5, abs=1e-6)
    assert doc["metadata"]["version"]


@pytest.mark.parametrize("mass,label", [(1.0, "stable_causal"), (0.1, "runaway")])
def test_stability_scatterer(capsys, mass, label):
    code, out, _ = run(capsys, "stability", "--scatterer", "resonance:1.0", "--temp", 0, "--mass", mass)
    assert code == 0 and json.loads(out)["class"] == label


def test_simulate_refuses_runaway(tmp_path, capsys):
    code, _, err = run(capsys, "simulate", "--abraham-lorentz", "M=1", "e2=1", "--out", tmp_path)
    assert code == 2 and "stability-error" in err
    code, _, _ = run(capsys, "simulate", "--model", "perfect", "--temp", 1, "--n-traj", 2, "--out", tmp_path)
    assert code == 2


def test_simulate_classical_is_reproducible(tmp_path, capsys):
    args = ["simulate", "--model", "perfect", "--temp", 1, "--classical", "--mass", 1e6, "--n-traj", 8,
            "--steps", 2048, "--seed", 5]
    code, out1, _ = run(capsys, *args, "--workers", 1, "--out", tmp_path / "a", "--write-trajectories")
    assert code == 0
    code, out2, _ = run(capsys, *args, "--workers", 4, "--out", tmp_path / "b", "--write-trajectories")
    assert out1 == out2
    rows = [[ln for ln in (tmp_path / d / "traj_7.csv").read_text().splitlines() if not ln.startswith("#")]
            for d in ("a", "b")]
    assert rows[0] == rows[1]
    doc = json.loads((tmp_path / "a" / "ensemble.json").read_text())
    assert doc["metadata"]["seed"] == 5
    assert doc["results"]["analytic_momentum_diffusion"] == pytest.approx(2 * np.pi / 3)


def test_simulate_bound_classical_reports_oracles(tmp_path, capsys):
    code, out, _ = run(capsys, "simulate", "--model", "resonance:1.0", "--temp", 0.5, "--classical", "--spring", 0.5,
                       "--n-traj", 10, "--steps", 1024, "--out", tmp_path)
    doc = json.loads(out)
    assert code == 0
    assert {"position_variance", "variance_oracle", "classical_T_over_K"} <= set(doc)
