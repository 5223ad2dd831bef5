"""Command-line interface: outputs, determinism, exit codes."""

import json

import numpy as np
import pytest

from heraldsim.cli import main
from heraldsim.qmath import DensityMatrix, PAULI_LABELS, bell_odd_plus, pauli_decompose
from heraldsim.tomography import (
    AssignmentMatrix,
    TomographySettings,
    assignment_to_json,
    counts_to_json,
    reference_assignment,
    simulate_counts,
)

IDEAL_CONFIG = {
    "preparation": {"phi_b": 0.0, "phi_off": 0.0},
    "decoherence": {"t2e_a": 1e12, "t2e_b": 1e12},
    "detector": {
        "round1": {"p_dark": 0.0, "p_real": 1.0},
        "round2": {"p_dark": 0.0, "p_real": 1.0},
    },
}


def write_config(tmp_path, doc, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(doc))
    return str(path)


class TestProtocolCommand:
    def test_defaults_reproduce_headline_fidelity(self, tmp_path):
        out = tmp_path / "out.json"
        assert main(["protocol", "--analytic", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert abs(doc["fidelity_theory"] - 0.76) <= 0.01
        assert doc["mode"] == "analytic"
        assert "config" in doc and doc["schema_version"] == 1
        # full resolved config is echoed
        assert doc["config"]["detector"]["round1"]["p_real"] == 0.21

    def test_ideal_config_perfect_state(self, tmp_path):
        cfg = write_config(tmp_path, IDEAL_CONFIG)
        out = tmp_path / "out.json"
        assert main(["protocol", "--config", cfg, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert abs(doc["fidelity_theory"] - 1.0) < 1e-9
        assert abs(doc["concurrence_theory"] - 1.0) < 1e-9
        assert abs(doc["outcome_probabilities"]["click_click"] - 0.125) < 1e-9

    def test_monte_carlo_reruns_byte_identical(self, tmp_path):
        out1, out2 = tmp_path / "a.json", tmp_path / "b.json"
        args = ["protocol", "--shots", "200000", "--seed", "7"]
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
        doc = json.loads(out1.read_text())
        assert doc["monte_carlo"]["shots"] == 200000
        assert doc["monte_carlo"]["post_selected"] > 0

    def test_unknown_config_key_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, {"preparation": {"theta_q": 1.0}})
        assert main(["protocol", "--config", cfg]) == 2

    def test_bad_value_exits_2(self, tmp_path):
        cfg = write_config(tmp_path, {"timing": {"p_init": 2.0}})
        assert main(["protocol", "--config", cfg]) == 2

    def test_control_block(self, tmp_path):
        out = tmp_path / "out.json"
        assert main(["protocol", "--analytic", "--control", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        labels = doc["control"]["pauli"]["labels"]
        comps = doc["control"]["pauli"]["components"]
        assert abs(comps[labels.index("ZZ")]) < 1e-9
        assert doc["control"]["concurrence"] < 1e-9


class TestSweepCommand:
    def test_phase_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(
            [
                "sweep",
                "--axis",
                "phi_b",
                "--from",
                "0",
                "--to",
                "6.283185307179586",
                "--points",
                "9",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        header = lines[0].split(",")
        assert header[0] == "phi_b"
        assert header[1:17] == list(PAULI_LABELS)
        assert header[17] == "probability"
        zz_col = header.index("ZZ")
        zz = [float(row.split(",")[zz_col]) for row in lines[1:]]
        assert np.max(np.abs(np.diff(zz))) < 1e-9
        assert all(v < -0.5 for v in zz)

    def test_theta_sweep_extremal_at_equator(self, tmp_path):
        cfg = write_config(tmp_path, IDEAL_CONFIG)
        out = tmp_path / "sweep.csv"
        rc = main(
            [
                "sweep",
                "--config",
                cfg,
                "--axis",
                "theta_a",
                "--from",
                "0",
                "--to",
                "3.141592653589793",
                "--points",
                "5",
                "--out",
                str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        header = lines[0].split(",")
        xx_col = header.index("XX")
        xx = [float(row.split(",")[xx_col]) for row in lines[1:]]
        assert np.argmax(np.abs(xx)) == 2

    def test_zero_points_exits_2(self):
        assert (
            main(["sweep", "--axis", "phi_b", "--from", "0", "--to", "1", "--points", "0"])
            == 2
        )

    def test_bad_axis_exits_2(self):
        assert (
            main(["sweep", "--axis", "zeta", "--from", "0", "--to", "1", "--points", "2"])
            == 2
        )

    def test_threads_match_sequential(self, tmp_path):
        args = [
            "sweep", "--axis", "phi_b", "--from", "0", "--to", "3.0", "--points", "4",
        ]
        out1, out2 = tmp_path / "s1.csv", tmp_path / "s2.csv"
        assert main(args + ["--out", str(out1)]) == 0
        assert main(args + ["--threads", "3", "--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()


class TestDetectorSimCommand:
    def test_dark_counts_summary(self, tmp_path):
        out = tmp_path / "det.json"
        traces = tmp_path / "traces.csv"
        rc = main(
            [
                "detector-sim", "--fock", "0",
                "--out", str(out), "--traces-out", str(traces),
            ]
        )
        assert rc == 0
        doc = json.loads(out.read_text())
        assert doc["p_click"] < 0.01
        assert doc["dark_count"] < 0.01
        header = traces.read_text().split("\n", 1)[0]
        assert header == "time_ns,n_A,n_D,p_e,pulse"

    def test_number_blindness(self, tmp_path):
        clicks = {}
        for fock in (1, 2):
            out = tmp_path / f"det{fock}.json"
            assert main(["detector-sim", "--fock", str(fock), "--out", str(out)]) == 0
            clicks[fock] = json.loads(out.read_text())["p_click"]
        assert abs(clicks[1] - clicks[2]) <= 0.02

    def test_detuning_sweep_csv(self, tmp_path):
        out = tmp_path / "sweep.csv"
        rc = main(
            [
                "detector-sim", "--fock", "1", "--sweep", "detuning",
                "--from", "-6", "--to", "0", "--points", "5",
                "--out", str(out),
            ]
        )
        assert rc == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "detuning,p_click"
        rows = [tuple(map(float, ln.split(","))) for ln in lines[1:]]
        by_det = dict(rows)
        assert by_det[-3.0] > by_det[-6.0]
        assert by_det[-3.0] > by_det[-4.5]

    def test_sweep_without_range_errors(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["detector-sim", "--sweep", "detuning"])
        assert exc.value.code == 2


class TestTomoCommand:
    def make_counts_file(self, tmp_path, rho, assignment, shots=None, seed=0):
        settings = None if shots is None else TomographySettings(shots)
        counts = simulate_counts(rho, assignment, settings, seed=seed)
        path = tmp_path / "counts.json"
        path.write_text(counts_to_json(counts))
        return str(path)

    def make_cal_file(self, tmp_path, assignment, name="cal.json"):
        path = tmp_path / name
        path.write_text(assignment_to_json(assignment))
        return str(path)

    def test_identity_calibration_noop(self, tmp_path):
        rho = DensityMatrix.from_ket(bell_odd_plus(), dims=(2, 2))
        counts = self.make_counts_file(tmp_path, rho, AssignmentMatrix.identity())
        cal = self.make_cal_file(tmp_path, AssignmentMatrix.identity())
        out = tmp_path / "tomo.json"
        rc = main(["tomo", "--counts", counts, "--cal", cal, "--out", str(out)])
        assert rc == 0
        doc = json.loads(out.read_text())
        assert abs(doc["fidelity"] - 1.0) < 1e-9

    def test_corrected_recovery_within_errors(self, tmp_path):
        rng = np.random.default_rng(5)
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        m = g @ g.conj().T
        rho = DensityMatrix((2, 2), m / np.trace(m))
        a = reference_assignment()
        counts = self.make_counts_file(tmp_path, rho, a, shots=200_000, seed=13)
        cal = self.make_cal_file(tmp_path, a)
        out = tmp_path / "tomo.json"
        assert main(["tomo", "--counts", counts, "--cal", cal, "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        truth = pauli_decompose(rho)
        comps = doc["pauli"]["components"]
        sigmas = doc["pauli"]["sigma"]
        for i, label in enumerate(PAULI_LABELS):
            if label == "II":
                continue
            assert abs(comps[i] - truth.components[i]) < 3.0 * sigmas[i] + 1e-12

    def test_singular_calibration_exits_2(self, tmp_path):
        rho = DensityMatrix.from_ket(bell_odd_plus(), dims=(2, 2))
        counts = self.make_counts_file(tmp_path, rho, AssignmentMatrix.identity())
        cal_path = tmp_path / "cal.json"
        doc = json.loads(assignment_to_json(AssignmentMatrix.identity()))
        doc["matrix"] = [[0.25] * 4] * 4
        cal_path.write_text(json.dumps(doc))
        assert main(["tomo", "--counts", counts, "--cal", str(cal_path)]) == 2

    def test_odd_minus_target(self, tmp_path):
        from heraldsim.qmath import bell_odd_minus

        rho = DensityMatrix.from_ket(bell_odd_minus(), dims=(2, 2))
        counts = self.make_counts_file(tmp_path, rho, AssignmentMatrix.identity())
        cal = self.make_cal_file(tmp_path, AssignmentMatrix.identity())
        out = tmp_path / "tomo.json"
        rc = main(
            [
                "tomo", "--counts", counts, "--cal", cal,
                "--target", "odd_minus", "--out", str(out),
            ]
        )
        assert rc == 0
        assert abs(json.loads(out.read_text())["fidelity"] - 1.0) < 1e-9


class TestConfigDir:
    def test_env_config_dir_resolution(self, tmp_path, monkeypatch):
        cfg_dir = tmp_path / "configs"
        cfg_dir.mkdir()
        (cfg_dir / "run.json").write_text(json.dumps(IDEAL_CONFIG))
        monkeypatch.setenv("HERALDSIM_CONFIG_DIR", str(cfg_dir))
        out = tmp_path / "out.json"
        assert main(["protocol", "--config", "run.json", "--out", str(out)]) == 0
        doc = json.loads(out.read_text())
        assert abs(doc["fidelity_theory"] - 1.0) < 1e-9
