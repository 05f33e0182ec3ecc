"""Monte Carlo drivers: configuration, table output, determinism."""

import filecmp
import math
import os

import pytest

from sparch import (
    ExperimentConfig,
    Table,
    UsageError,
    run_experiment,
)
from sparch.experiments import oriented_lattice_weights


def _config(experiment, replicates, threads=1, base_seed=0, **options):
    return ExperimentConfig(
        experiment=experiment,
        replicates=replicates,
        base_seed=base_seed,
        threads=threads,
        options=options,
    )


def _assert_trees_equal(left, right):
    names = sorted(os.listdir(left))
    assert names == sorted(os.listdir(right))
    for name in names:
        assert filecmp.cmp(
            os.path.join(left, name), os.path.join(right, name), shallow=False
        ), name


class TestExperimentConfig:
    def test_from_dict_flattens_unknown_keys(self):
        cfg = ExperimentConfig.from_dict(
            {"experiment": "moran_vs_rho", "replicates": 5, "d": 10}
        )
        assert cfg.replicates == 5
        assert cfg.options == {"d": 10}

    def test_from_dict_merges_nested_options(self):
        cfg = ExperimentConfig.from_dict(
            {
                "experiment": "moran_vs_rho",
                "d": 10,
                "options": {"alpha": 2.0, "d": 12},
            }
        )
        assert cfg.options == {"d": 12, "alpha": 2.0}

    def test_nested_options_must_be_object(self):
        with pytest.raises(UsageError, match="options"):
            ExperimentConfig.from_dict(
                {"experiment": "moran_vs_rho", "options": [1, 2]}
            )

    def test_missing_experiment_rejected(self):
        with pytest.raises(UsageError, match="experiment"):
            ExperimentConfig.from_dict({"replicates": 3})

    def test_unknown_experiment_rejected(self):
        with pytest.raises(UsageError, match="must be one of"):
            ExperimentConfig(experiment="bogus")

    @pytest.mark.parametrize(
        "kwargs", [{"replicates": 0}, {"threads": 0}]
    )
    def test_counts_validated(self, kwargs):
        with pytest.raises(UsageError):
            ExperimentConfig(experiment="custom", **kwargs)


class TestTable:
    def test_csv_formatting(self, tmp_path):
        table = Table(
            columns=("name", "value"),
            rows=[
                ("flag", True),
                ("off", False),
                ("count", 3),
                ("x", 0.1),
                ("missing", None),
            ],
        )
        path = tmp_path / "t.csv"
        table.to_csv(path)
        assert path.read_text() == (
            "name,value\nflag,true\noff,false\ncount,3\nx,0.1\nmissing,\n"
        )

    def test_float_repr_round_trips(self, tmp_path):
        value = 1.0 / 3.0
        table = Table(columns=("v",), rows=[(value,)])
        path = tmp_path / "v.csv"
        table.to_csv(path)
        cell = path.read_text().strip().split("\n")[1]
        assert float(cell) == value

    def test_column_accessor(self):
        table = Table(columns=("a", "b"), rows=[(1, 2), (3, 4)])
        assert table.column("b") == [2, 4]


class TestMoranVsRho:
    def test_row_count_invariant(self):
        result = run_experiment(
            _config("moran_vs_rho", 4, d=6, rho_grid=[0.0, 1.0])
        )
        # 2 settings x 4 replicates x 8 statistics in long format
        assert len(result.replicates.rows) == 2 * 4 * 8
        settings = set(result.replicates.column("setting"))
        assert settings == {"rho0.0", "rho1.0"}
        assert len(result.summary.rows) == 2 * 12

    def test_rho_zero_has_unbounded_support(self):
        result = run_experiment(_config("moran_vs_rho", 2, d=5, rho_grid=[0.0]))
        bound = [
            row[2]
            for row in result.summary.rows
            if row[0] == "rho0.0" and row[1] == "a_bound"
        ][0]
        assert math.isinf(bound)

    def test_config_echo_is_resolved(self):
        result = run_experiment(_config("moran_vs_rho", 2, d=5, rho_grid=[0.5]))
        assert result.config["d"] == 5
        assert result.config["alpha"] == 5.0
        assert result.config["replicates"] == 2

    def test_save_realizations(self):
        result = run_experiment(
            _config("moran_vs_rho", 2, d=5, rho_grid=[0.5], save_realizations=True)
        )
        assert set(result.realizations) == {("rho0.5", 0), ("rho0.5", 1)}

    @pytest.mark.parametrize(
        "options, match",
        [
            ({"d": 1}, "d must be"),
            ({"rho_grid": []}, "rho_grid"),
            ({"truncation_margin": 1.5}, "truncation_margin"),
            ({"bogus": 1}, "unknown options"),
        ],
    )
    def test_option_validation(self, options, match):
        with pytest.raises(UsageError, match=match):
            run_experiment(_config("moran_vs_rho", 2, **options))


class TestEstimatorDensity:
    def test_settings_list(self):
        result = run_experiment(
            _config(
                "estimator_density",
                3,
                settings=[{"d": 5, "alpha": 1.0, "rho": 0.3}],
                grid_points=16,
            )
        )
        assert len(result.replicates.rows) == 3 * 7
        assert set(result.replicates.column("setting")) == {"d5_a1.0_r0.3"}
        names = [row[1] for row in result.summary.rows]
        assert "n_converged" in names
        assert "share_rho_hat_below_0.05" in names
        assert "density" in result.extra

    def test_grid_product(self):
        result = run_experiment(
            _config(
                "estimator_density",
                2,
                d_grid=[5],
                alpha_grid=[1.0],
                rho_grid=[0.2, 0.5],
                grid_points=8,
            )
        )
        assert set(result.replicates.column("setting")) == {
            "d5_a1.0_r0.2",
            "d5_a1.0_r0.5",
        }

    def test_density_grid_size(self):
        result = run_experiment(
            _config(
                "estimator_density",
                5,
                settings=[{"d": 5, "alpha": 1.0, "rho": 0.4}],
                grid_points=32,
            )
        )
        density = result.extra["density"]
        per_param = {}
        for setting, parameter, grid, value in density.rows:
            per_param.setdefault(parameter, 0)
            per_param[parameter] += 1
        # every parameter with a non-degenerate sample gets a full grid
        assert all(count == 32 for count in per_param.values())

    @pytest.mark.parametrize(
        "options, match",
        [
            ({"settings": []}, "settings"),
            ({"settings": [{"d": 1, "alpha": 1.0, "rho": 0.2}]}, "invalid setting"),
            ({"grid_points": 1}, "grid_points"),
            ({"bogus": 1}, "unknown options"),
        ],
    )
    def test_option_validation(self, options, match):
        with pytest.raises(UsageError, match=match):
            run_experiment(_config("estimator_density", 2, **options))

    def test_oriented_lattice_weights_are_triangular(self):
        wt = oriented_lattice_weights(6)
        assert wt.solve_order() is not None
        assert wt.row_standardized


class TestSarSparchRecovery:
    def test_small_run(self):
        result = run_experiment(
            _config("sar_sparch_recovery", 2, d=6, lambdas=[0.2], rho=0.5)
        )
        summary = {row[1]: row[2] for row in result.summary.rows}
        assert summary["n_total"] == 2
        assert summary["n_failed"] == 0
        assert "share_aic_favors_full" in summary
        assert "mean_full_lambda1" in summary
        statistics = set(result.replicates.column("statistic"))
        assert {"sar_aic", "full_aic", "aic_margin", "full_rho"} <= statistics

    def test_beta_must_be_single_intercept(self):
        with pytest.raises(UsageError, match="beta"):
            run_experiment(
                _config("sar_sparch_recovery", 2, d=6, beta=[1.0, 2.0])
            )


class TestCustom:
    MODEL = {
        "model": "sparch",
        "alpha": 1.0,
        "rho": 0.5,
        "weights": {"kind": "oriented",
                    "base": {"kind": "queen_lag", "d": 5, "lag": 1},
                    "domain": {"lattice": 5},
                    "origin": "center",
                    "row_standardize": True},
        "error": "gaussian",
    }

    def test_runs_and_summarizes(self):
        result = run_experiment(_config("custom", 3, model=self.MODEL))
        assert len(result.replicates.rows) == 3 * 9
        summary = {row[1]: row[2] for row in result.summary.rows}
        assert summary["n_total"] == 3
        assert summary["n_valid"] == 3
        assert "mean_moran_y2" in summary

    def test_model_required(self):
        with pytest.raises(UsageError, match="model"):
            run_experiment(_config("custom", 2))

    def test_sar_model_rejected(self):
        doc = {
            "model": "sarsparch",
            "beta": [1.0],
            "lambdas": [0.3],
            "sar_weights": [{"kind": "rook", "d": 5}],
            "X": None,
            "alpha": 0.1,
            "rho": 0.5,
            "arch_weights": self.MODEL["weights"],
            "error": "gaussian",
        }
        with pytest.raises(UsageError, match="plain spatial ARCH"):
            run_experiment(_config("custom", 2, model=doc))


class TestDeterminism:
    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = _config("moran_vs_rho", 3, d=5, rho_grid=[0.5, 1.0])
        first = tmp_path / "a"
        second = tmp_path / "b"
        run_experiment(cfg).write(first)
        run_experiment(cfg).write(second)
        _assert_trees_equal(first, second)

    def test_threads_do_not_change_output(self, tmp_path):
        serial = _config("estimator_density", 4,
                         settings=[{"d": 5, "alpha": 1.0, "rho": 0.4}],
                         grid_points=8)
        threaded = _config("estimator_density", 4, threads=2,
                           settings=[{"d": 5, "alpha": 1.0, "rho": 0.4}],
                           grid_points=8)
        a = tmp_path / "serial"
        b = tmp_path / "threaded"
        run_experiment(serial).write(a)
        run_experiment(threaded).write(b)
        _assert_trees_equal(a, b)

    def test_base_seed_shifts_replicates(self):
        cfg0 = _config("moran_vs_rho", 2, d=5, rho_grid=[0.5])
        cfg7 = _config("moran_vs_rho", 2, base_seed=7, d=5, rho_grid=[0.5])
        rows0 = run_experiment(cfg0).replicates.rows
        rows7 = run_experiment(cfg7).replicates.rows
        assert rows0 != rows7

    def test_replicate_seed_offsets(self):
        """Replicate r of base_seed b equals replicate 0 of base_seed b+r."""
        wide = run_experiment(_config("moran_vs_rho", 3, d=5, rho_grid=[0.5]))
        shifted = run_experiment(
            _config("moran_vs_rho", 1, base_seed=2, d=5, rho_grid=[0.5])
        )
        wide_last = [
            (row[2], row[3]) for row in wide.replicates.rows if row[1] == 2
        ]
        shifted_first = [(row[2], row[3]) for row in shifted.replicates.rows]
        assert wide_last == shifted_first

    def test_write_outputs_expected_files(self, tmp_path):
        result = run_experiment(_config("moran_vs_rho", 2, d=5, rho_grid=[0.5]))
        paths = result.write(tmp_path / "out")
        names = sorted(os.path.basename(p) for p in paths)
        assert names == [
            "moran_vs_rho_config.json",
            "moran_vs_rho_replicates.csv",
            "moran_vs_rho_summary.csv",
        ]
