import csv
import json

import numpy as np
import pytest

from coupled_ris.cli import main

from conftest import Z0, dipole_coupling, random_channels


def write_config(path, payload):
    path.write_text(json.dumps(payload))
    return str(path)


class TestCouplingCommand:
    def test_round_trip(self, tmp_path):
        config = write_config(tmp_path / "geom.json", {"n": 16, "spacing_wl": 0.25})
        assert main(["coupling", "--config", config, "--out", str(tmp_path)]) == 0

        rows = list(csv.DictReader((tmp_path / "coupling.csv").open()))
        assert len(rows) == 16 * 16
        matrix = np.zeros((16, 16), dtype=complex)
        for row in rows:
            matrix[int(row["row"]), int(row["col"])] = (
                float(row["re_ohm"]) + 1j * float(row["im_ohm"]))
        expected = dipole_coupling(16, 0.25).values
        assert np.abs(matrix - expected).max() <= 1e-9 * np.abs(expected).max()

        meta = json.loads((tmp_path / "coupling_meta.json").read_text())
        assert meta["n"] == 16
        assert meta["re_lambda_min"] > 0
        assert meta["re_lambda_max"] >= meta["re_lambda_min"]

    def test_missing_key_is_config_error(self, tmp_path):
        config = write_config(tmp_path / "geom.json", {"spacing_wl": 0.25})
        assert main(["coupling", "--config", config, "--out", str(tmp_path)]) == 2

    def test_bad_json_is_config_error(self, tmp_path):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        assert main(["coupling", "--config", str(bad), "--out", str(tmp_path)]) == 2

    def test_missing_file_is_config_error(self, tmp_path):
        assert main(["coupling", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path)]) == 2


class TestOptimizeCommand:
    def make_instance(self, tmp_path, rng, architecture="fc", aware=True, coupling=None):
        chan = random_channels(rng, 4)
        payload = {
            "architecture": architecture,
            "aware": aware,
            "z0_ohm": 50.0,
            "channels": {
                "representation": "impedance",
                "direct": [chan.direct.real, chan.direct.imag],
                "ris_to_rx": [chan.ris_to_rx.real.tolist(), chan.ris_to_rx.imag.tolist()],
                "tx_to_ris": [chan.tx_to_ris.real.tolist(), chan.tx_to_ris.imag.tolist()],
            },
        }
        if coupling is not None:
            payload["coupling"] = coupling
        return chan, write_config(tmp_path / "instance.json", payload)

    def test_fully_connected_reaches_bound(self, tmp_path, rng):
        matrix = dipole_coupling(4, 0.25).values
        coupling = {"values_re": matrix.real.tolist(), "values_im": matrix.imag.tolist()}
        _, config = self.make_instance(tmp_path, rng, coupling=coupling)
        assert main(["optimize", "--config", config, "--out", str(tmp_path)]) == 0
        result = json.loads((tmp_path / "optimize_result.json").read_text())
        assert result["load_kind"] == "reactance"
        load = np.asarray(result["load"])
        assert load.shape == (4, 4)
        assert np.abs(load - load.T).max() == 0.0
        assert result["achieved_gain"] == pytest.approx(result["bound_gain"], rel=1e-8)
        assert result["residual"] <= 1e-8

    def test_geometry_reference(self, tmp_path, rng):
        coupling = {"spacing_wl": 0.25, "geometry": {"n_x": 2}}
        _, config = self.make_instance(tmp_path, rng, architecture="tc",
                                       coupling=coupling)
        assert main(["optimize", "--config", config, "--out", str(tmp_path)]) == 0
        result = json.loads((tmp_path / "optimize_result.json").read_text())
        assert result["load_kind"] == "susceptance"
        load = np.asarray(result["load"])
        off = np.abs(np.arange(4)[:, None] - np.arange(4)[None, :]) > 1
        assert not load[off].any()

    def test_unaware_reports_true_gain(self, tmp_path, rng):
        matrix = dipole_coupling(4, 0.125).values
        coupling = {"values_re": matrix.real.tolist(), "values_im": matrix.imag.tolist()}
        _, config = self.make_instance(tmp_path, rng, architecture="dris",
                                       aware=False, coupling=coupling)
        assert main(["optimize", "--config", config, "--out", str(tmp_path)]) == 0
        result = json.loads((tmp_path / "optimize_result.json").read_text())
        assert "gain_under_true_coupling" in result
        assert result["gain_under_true_coupling"] <= result["bound_gain"] * (1 + 1e-8)

    def test_unknown_architecture(self, tmp_path, rng):
        _, config = self.make_instance(tmp_path, rng, architecture="ring")
        assert main(["optimize", "--config", config, "--out", str(tmp_path)]) == 2


class TestSweepCommands:
    def test_sweep_d_outputs(self, tmp_path):
        config = write_config(tmp_path / "sweep.json", {
            "n_list": [16],
            "spacing_wl": [0.5, 0.25],
            "trials": 3,
            "architectures": ["fc"],
            "awareness": ["aware", "unaware"],
        })
        assert main(["sweep-d", "--config", config, "--out", str(tmp_path),
                     "--seed", "7"]) == 0
        trials = (tmp_path / "trials.csv").read_text().splitlines()
        assert len(trials) == 1 + 2 * 3 * 2
        plot = json.loads((tmp_path / "plot_spec.json").read_text())
        assert plot["kind"] == "sweep_spacing"

    def test_seed_flag_changes_results(self, tmp_path):
        config = write_config(tmp_path / "sweep.json", {
            "n_list": [8], "spacing_wl": [0.25], "trials": 2,
            "architectures": ["fc"], "awareness": ["aware"],
            "geometry": {"n_x": 8},
        })
        out_a, out_b, out_c = tmp_path / "a", tmp_path / "b", tmp_path / "c"
        assert main(["sweep-n", "--config", config, "--out", str(out_a), "--seed", "1"]) == 0
        assert main(["sweep-n", "--config", config, "--out", str(out_b), "--seed", "2"]) == 0
        assert main(["sweep-n", "--config", config, "--out", str(out_c), "--seed", "1"]) == 0
        gains = lambda p: [r["gain_linear"] for r in csv.DictReader((p / "trials.csv").open())]
        assert gains(out_a) != gains(out_b)
        assert gains(out_a) == gains(out_c)

    def test_threads_env_override(self, tmp_path, monkeypatch):
        config = write_config(tmp_path / "sweep.json", {
            "n_list": [8], "spacing_wl": [0.25], "trials": 2,
            "architectures": ["fc"], "awareness": ["aware"],
        })
        monkeypatch.setenv("COUPLED_RIS_THREADS", "2")
        assert main(["sweep-n", "--config", config, "--out", str(tmp_path)]) == 0
        monkeypatch.setenv("COUPLED_RIS_THREADS", "zebra")
        assert main(["sweep-n", "--config", config, "--out", str(tmp_path)]) == 2

    def test_unknown_awareness_mode(self, tmp_path):
        config = write_config(tmp_path / "sweep.json", {
            "n_list": [8], "spacing_wl": [0.25], "trials": 1,
            "awareness": ["psychic"],
        })
        assert main(["sweep-n", "--config", config, "--out", str(tmp_path)]) == 2

    def test_scaling_command(self, tmp_path):
        config = write_config(tmp_path / "scaling.json", {
            "n_list": [16], "spacing_wl": [0.25], "trials": 150,
        })
        assert main(["scaling", "--config", config, "--out", str(tmp_path),
                     "--seed", "5"]) == 0
        lines = (tmp_path / "scaling.csv").read_text().splitlines()
        assert len(lines) == 2


class TestSelftestCommand:
    def test_passes(self, capsys):
        assert main(["selftest"]) == 0
        out = capsys.readouterr().out
        assert out.count("ok  ") >= 7
        assert "FAIL" not in out
