"""Config-driven orchestration: artifacts, exit codes, reproducibility."""

import csv
import json

from wavetrainlab.cli import run


def read_csv(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


class TestBranchCommand:
    def test_row_count_and_values(self, tmp_path):
        cfg = {
            "command": "branch",
            "family": "lambda_omega",
            "gamma": 0.5,
            "k": [0.1, 0.5],
            "steps": 17,
        }
        assert run(cfg, tmp_path) == 0
        rows = read_csv(tmp_path / "branch.csv")
        assert len(rows) == 17
        row = min(rows, key=lambda r: abs(float(r["k"]) - 0.3))
        assert abs(float(row["omega"]) - 0.455) < 1e-9
        assert abs(float(row["c_g"]) + 0.3) < 1e-6
        assert abs(float(row["beta"]) - 0.5) < 1e-6
        assert float(row["residual_norm"]) < 1e-9
        assert (tmp_path / "meta.json").exists()

    def test_reproducible_bytes(self, tmp_path):
        cfg = {
            "command": "branch",
            "family": "lambda_omega",
            "gamma": 0.5,
            "k": [0.2, 0.4],
            "steps": 9,
        }
        run(cfg, tmp_path / "a")
        run(cfg, tmp_path / "b")
        assert (tmp_path / "a" / "branch.csv").read_bytes() == (
            tmp_path / "b" / "branch.csv"
        ).read_bytes()


class TestValidation:
    def test_malformed_config_exit3(self, tmp_path):
        cfg = {"command": "branch", "family": "lambda_omega", "k": "oops"}
        assert run(cfg, tmp_path) == 3
        err = json.loads((tmp_path / "errors.json").read_text())
        assert "k" in err["message"]

    def test_unknown_command(self, tmp_path):
        assert run({"command": "frobnicate"}, tmp_path) == 3

    def test_unknown_key_rejected(self, tmp_path):
        cfg = {"command": "wavetrain", "family": "lambda_omega", "k": 0.3,
               "bogus_key": 1}
        assert run(cfg, tmp_path) == 3
        err = json.loads((tmp_path / "errors.json").read_text())
        assert "bogus_key" in err["message"]

    def test_runtime_failure_exit2(self, tmp_path):
        # steep phase step: sup |phi0'| leaves the modulation regime
        cfg = {
            "command": "mixing-report", "family": "lambda_omega", "gamma": 0.0,
            "k": 0.3, "scenario": "mixing", "phi_d": 0.4, "phi0_width": 0.4,
            "n_wavelengths": 16, "points_per_wavelength": 16, "t_final": 4.0,
            "dt": 0.04,
        }
        code = run(cfg, tmp_path)
        assert code == 2
        err = json.loads((tmp_path / "errors.json").read_text())
        assert err["error_type"] == "RegimeError"


class TestOtherCommands:
    def test_wavetrain_artifacts(self, tmp_path):
        cfg = {"command": "wavetrain", "family": "lambda_omega", "gamma": 0.5,
               "k": 0.3}
        assert run(cfg, tmp_path) == 0
        meta = json.loads((tmp_path / "wavetrain.json").read_text())
        assert abs(meta["omega"] - 0.455) < 1e-10
        assert len(read_csv(tmp_path / "profile.csv")) == 64

    def test_bloch_artifacts(self, tmp_path):
        cfg = {"command": "bloch", "family": "lambda_omega", "gamma": 0.0,
               "k": 0.3, "n_ell": 64}
        assert run(cfg, tmp_path) == 0
        stab = json.loads((tmp_path / "stability.json").read_text())
        assert stab["stable"] is True
        assert abs(stab["alpha"] - 0.802197802) < 1e-4
        rows = read_csv(tmp_path / "spectrum.csv")
        assert {"ell", "j", "re_lambda", "im_lambda"} == set(rows[0])

    def test_burgers_and_rg(self, tmp_path):
        cfg = {
            "command": "burgers", "alpha": 1.0, "beta": 1.0, "case": "iii",
            "T_list": [5.0, 10.0, 20.0], "dt": 0.02,
            "n_points": 1024, "domain_length": 200.0,
        }
        assert run(cfg, tmp_path / "b") == 0
        rows = read_csv(tmp_path / "b" / "burgers_error.csv")
        assert [r["T"] for r in rows]
        cfg = {
            "command": "rg", "alpha": 1.0, "beta": 1.0, "L": 2.0, "n_iter": 3,
            "scaling": "nonzero_mass", "n_points": 1024, "domain_length": 200.0,
            "q0": {"kind": "gaussian", "mass": 1.0, "width": 2.0,
                   "center_offset": 2.0},
        }
        assert run(cfg, tmp_path / "r") == 0
        rows = read_csv(tmp_path / "r" / "rg.csv")
        assert len(rows) == 3

    def test_simulate_trajectory(self, tmp_path):
        cfg = {"command": "simulate", "family": "lambda_omega", "gamma": 0.5,
               "k": 0.3, "n_wavelengths": 4, "points_per_wavelength": 16,
               "t_final": 3.0, "dt": 0.02}
        assert run(cfg, tmp_path) == 0
        meta = json.loads((tmp_path / "trajectory" / "meta.json").read_text())
        assert meta["d"] == 2
        assert (tmp_path / "trajectory" / "snapshot_0000.bin").exists()

    def test_mixing_report_small(self, tmp_path):
        cfg = {
            "command": "mixing-report", "family": "lambda_omega", "gamma": 0.0,
            "k": 0.3, "scenario": "mixing", "phi_d": 0.4,
            "n_wavelengths": 32, "points_per_wavelength": 16,
            "t_final": 16.0, "dt": 0.04,
        }
        assert run(cfg, tmp_path) == 0
        rate = json.loads((tmp_path / "rate.json").read_text())
        assert "slope" in rate
        rows = read_csv(tmp_path / "error.csv")
        assert {"t", "sup_err", "weighted_err"} == set(rows[0])
        fronts = read_csv(tmp_path / "fronts.csv")
        assert {"t", "x_frame", "phi", "profile"} == set(fronts[0])
        report = json.loads((tmp_path / "report.json").read_text())
        assert report["mass_max_drift"] < 1e-4
