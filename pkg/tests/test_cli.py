"""Command-line interface: argument handling, files, exit codes."""

import filecmp
import json
import os

import numpy as np
import pytest
from numpy.testing import assert_allclose

from sparch import GaussianError, SpArchModel, simulate
from sparch.cli import main


def _write_json(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


SPARCH_DOC = {
    "model": "sparch",
    "alpha": 1.0,
    "rho": 0.6,
    "weights": {
        "kind": "oriented",
        "base": {"kind": "queen_lag", "d": 5, "lag": 1},
        "domain": {"lattice": 5},
        "origin": "center",
        "row_standardize": True,
    },
    "error": "gaussian",
}


class TestWeightsCommand:
    def test_rook_triplets(self, tmp_path, capsys):
        spec = _write_json(tmp_path / "w.json", {"kind": "rook", "d": 2})
        out = tmp_path / "w.csv"
        assert main(["weights", spec, "--out", str(out)]) == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "i,j,w"
        assert len(lines) == 9
        assert all(line.split(",")[2] == "0.5" for line in lines[1:])
        stdout = capsys.readouterr().out
        assert "n=4" in stdout
        assert "triangularizable=no" in stdout

    def test_missing_spec_file(self, capsys):
        assert main(["weights", "/no/such/file.json"]) == 1
        assert "error:" in capsys.readouterr().err


class TestSimulateCommand:
    def test_matches_library_simulation(self, tmp_path, oriented8):
        doc = dict(SPARCH_DOC)
        doc["weights"] = {"kind": "rook", "d": 5}
        doc["rho"] = 0.0
        model = _write_json(tmp_path / "m.json", doc)
        out = tmp_path / "real.csv"
        assert main(["simulate", model, "--seed", "5", "--out", str(out)]) == 0
        rows = np.genfromtxt(out, delimiter=",", names=True)
        from sparch import build_rook

        direct = simulate(
            SpArchModel(1.0, build_rook(5).scaled(0.0), GaussianError()), seed=5
        )
        assert_allclose(rows["y"], direct.y, rtol=0.0, atol=0.0)
        assert_allclose(rows["h"], np.ones(25), rtol=0.0, atol=0.0)

    def test_prints_validity_certificate(self, tmp_path, capsys):
        model = _write_json(tmp_path / "m.json", SPARCH_DOC)
        out = tmp_path / "real.csv"
        assert main(["simulate", model, "--out", str(out)]) == 0
        assert "validity=triangular" in capsys.readouterr().out

    def test_inadmissible_draw_exits_2(self, tmp_path, capsys):
        doc = {
            "model": "sparch",
            "alpha": 1.0,
            "rho": 1.5,
            "weights": {"kind": "rook", "d": 4},
            "error": "gaussian",
        }
        model = _write_json(tmp_path / "m.json", doc)
        out = tmp_path / "real.csv"
        assert main(["simulate", model, "--seed", "0", "--out", str(out)]) == 2
        assert "numerical failure" in capsys.readouterr().err

    def test_sar_model_writes_xi(self, tmp_path):
        doc = {
            "model": "sarsparch",
            "beta": [1.0],
            "lambdas": [0.3],
            "sar_weights": [{"kind": "rook", "d": 5}],
            "X": None,
            "alpha": 0.5,
            "rho": 0.5,
            "arch_weights": SPARCH_DOC["weights"],
            "error": "gaussian",
        }
        model = _write_json(tmp_path / "m.json", doc)
        out = tmp_path / "real.csv"
        assert main(["simulate", model, "--out", str(out)]) == 0
        header = out.read_text().split("\n", 1)[0]
        assert header == "site_index,y,h,eps,xi"


class TestFitCommand:
    @pytest.fixture()
    def fit_inputs(self, tmp_path, oriented8):
        model = SpArchModel(1.0, oriented8.scaled(0.6), GaussianError())
        real = simulate(model, seed=7)
        data = tmp_path / "data.csv"
        real.to_csv(data)
        wcsv = tmp_path / "w.csv"
        oriented8.to_csv(wcsv)
        return str(data), str(wcsv)

    def test_writes_fit_json_and_residuals(self, tmp_path, fit_inputs, capsys):
        data, wcsv = fit_inputs
        out = tmp_path / "fit.json"
        resid = tmp_path / "resid.csv"
        code = main(
            ["fit", data, wcsv, "--out", str(out), "--residuals", str(resid)]
        )
        assert code == 0
        doc = json.loads(out.read_text())
        assert doc["model"] == "sparch"
        assert doc["converged"] is True
        assert 0.2 < doc["estimates"]["rho"] < 1.0
        assert resid.read_text().split("\n", 1)[0] == "site_index,eps"
        assert "converged=yes" in capsys.readouterr().out

    def test_unknown_column_exits_1(self, tmp_path, fit_inputs, capsys):
        data, wcsv = fit_inputs
        code = main(["fit", data, wcsv, "--column", "z", "--out",
                     str(tmp_path / "f.json")])
        assert code == 1
        assert "no column named 'z'" in capsys.readouterr().err

    def test_inline_error_spec(self, tmp_path, fit_inputs):
        data, wcsv = fit_inputs
        out = tmp_path / "fit.json"
        code = main(
            [
                "fit", data, wcsv,
                "--error", '{"kind": "truncated_gaussian", "a": 4.0}',
                "--out", str(out),
            ]
        )
        assert code == 0
        assert json.loads(out.read_text())["estimates"]["alpha"] > 0

    def test_malformed_inline_error_exits_1(self, tmp_path, fit_inputs, capsys):
        data, wcsv = fit_inputs
        code = main(["fit", data, wcsv, "--error", "{bad json",
                     "--out", str(tmp_path / "f.json")])
        assert code == 1
        assert "not valid JSON" in capsys.readouterr().err


class TestDiagnoseCommand:
    @pytest.fixture()
    def data_csv(self, tmp_path, oriented8):
        model = SpArchModel(1.0, oriented8.scaled(0.8), GaussianError())
        real = simulate(model, seed=3)
        path = tmp_path / "data.csv"
        real.to_csv(path)
        return str(path)

    def test_lattice_bands(self, tmp_path, data_csv):
        out = tmp_path / "diag.csv"
        code = main(
            ["diagnose", data_csv, "--lattice", "8", "--max-lag", "2",
             "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert lines[0] == "series,lag,I,expectation,std,z,p"
        labels = [tuple(line.split(",")[:2]) for line in lines[1:]]
        assert labels == [("y", "1"), ("y", "2"), ("y2", "1"), ("y2", "2")]
        for line in lines[1:]:
            float(line.split(",")[2])

    def test_no_squares_flag(self, tmp_path, data_csv):
        out = tmp_path / "diag.csv"
        code = main(
            ["diagnose", data_csv, "--lattice", "8", "--max-lag", "1",
             "--no-squares", "--out", str(out)]
        )
        assert code == 0
        lines = out.read_text().strip().split("\n")
        assert [line.split(",")[0] for line in lines[1:]] == ["y"]

    def test_weights_file_base(self, tmp_path, data_csv, rook5, oriented8):
        wcsv = tmp_path / "w.csv"
        oriented8.to_csv(wcsv)
        out = tmp_path / "diag.csv"
        code = main(
            ["diagnose", data_csv, "--weights", str(wcsv), "--max-lag", "1",
             "--out", str(out)]
        )
        assert code == 0

    def test_requires_exactly_one_geometry(self, tmp_path, data_csv, capsys):
        assert main(["diagnose", data_csv, "--out", str(tmp_path / "d.csv")]) == 1
        assert "exactly one" in capsys.readouterr().err
        wcsv = tmp_path / "w.csv"
        wcsv.write_text("i,j,w\n0,1,1.0\n")
        code = main(
            ["diagnose", data_csv, "--weights", str(wcsv), "--lattice", "8",
             "--out", str(tmp_path / "d.csv")]
        )
        assert code == 1

    def test_size_mismatch_exits_1(self, tmp_path, data_csv, capsys):
        code = main(
            ["diagnose", data_csv, "--lattice", "5",
             "--out", str(tmp_path / "d.csv")]
        )
        assert code == 1
        assert "25 sites" in capsys.readouterr().err


class TestExperimentCommand:
    CONFIG = {
        "experiment": "moran_vs_rho",
        "replicates": 3,
        "d": 5,
        "rho_grid": [0.5],
    }

    def test_writes_results_and_reruns_identically(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "cfg.json", self.CONFIG)
        first = tmp_path / "r1"
        second = tmp_path / "r2"
        assert main(["experiment", cfg, "--out", str(first)]) == 0
        assert main(["experiment", cfg, "--out", str(second)]) == 0
        names = sorted(os.listdir(first))
        assert names == [
            "moran_vs_rho_config.json",
            "moran_vs_rho_replicates.csv",
            "moran_vs_rho_summary.csv",
        ]
        for name in names:
            assert filecmp.cmp(first / name, second / name, shallow=False)
        assert "wrote" in capsys.readouterr().out

    def test_seed_flag_overrides_config(self, tmp_path):
        doc = dict(self.CONFIG)
        doc["base_seed"] = 3
        cfg = _write_json(tmp_path / "cfg.json", doc)
        out = tmp_path / "res"
        assert main(["experiment", cfg, "--seed", "9", "--out", str(out)]) == 0
        echoed = json.loads((out / "moran_vs_rho_config.json").read_text())
        assert echoed["base_seed"] == 9

    def test_config_seed_survives_default_flag(self, tmp_path):
        doc = dict(self.CONFIG)
        doc["base_seed"] = 3
        cfg = _write_json(tmp_path / "cfg.json", doc)
        out = tmp_path / "res"
        assert main(["experiment", cfg, "--out", str(out)]) == 0
        echoed = json.loads((out / "moran_vs_rho_config.json").read_text())
        assert echoed["base_seed"] == 3

    def test_unknown_experiment_exits_1(self, tmp_path, capsys):
        cfg = _write_json(tmp_path / "cfg.json", {"experiment": "bogus"})
        assert main(["experiment", cfg, "--out", str(tmp_path / "r")]) == 1
        assert "must be one of" in capsys.readouterr().err


class TestTopLevel:
    def test_version_flag(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["--version"])
        assert exc.value.code == 0
        assert capsys.readouterr().out.startswith("sparch ")

    def test_no_command_exits_1(self, capsys):
        assert main([]) == 1

    def test_unknown_command_exits_1(self, capsys):
        assert main(["bogus"]) == 1
        assert "error:" in capsys.readouterr().err
