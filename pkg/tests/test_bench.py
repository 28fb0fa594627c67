import csv

import numpy as np
import pytest

import sketchdescent as skd
from sketchdescent.bench import (
    GCD_TAU_GRID,
    GK_TAU_GRID,
    parse_family,
    tau_grid,
)
from sketchdescent.errors import InvalidConfigError
from sketchdescent.rng import derive_seed


def gen_dataset(m, n, spd=False, seed=0):
    kind = "gaussian-normal-equations" if spd else "gaussian"
    return skd.DatasetSpec(kind="gen", gen=skd.GenSpec(kind, m, n, seed=seed))


def small_plan(**overrides):
    base = dict(
        datasets=[gen_dataset(20, 8, seed=3)],
        method="ssd",
        family="row",
        rules=[skd.parse_rule("uniform")],
        gammas=[0.0],
        omega=1.0,
        tol=1e-8,
        max_iters=2000,
        reps=2,
        seed=5,
        x0="ones1000",
        check_every=50,
    )
    base.update(overrides)
    return skd.ExperimentPlan(**base)


def strip_walltime(path):
    """CSV lines with every :walltime column removed."""
    with open(path, encoding="utf-8") as fh:
        rows = [line.rstrip("\n").split(",") for line in fh]
    header = rows[0]
    keep = [j for j, name in enumerate(header) if ":walltime" not in name]
    return ["\x1f".join(row[j] for j in keep) for row in rows]


class TestGrids:
    def test_tau_grid_clips_and_appends_q(self):
        assert tau_grid(GCD_TAU_GRID, 20) == [1, 5, 10, 20]
        assert tau_grid(GK_TAU_GRID, 60) == [1, 5, 20, 50, 60]
        assert tau_grid((1, 5), 3) == [1, 3]
        assert tau_grid((), 4) == [4]

    def test_parse_family(self):
        assert parse_family("row") == ("row", None)
        assert parse_family("block:4") == ("block", 4)
        for bad in ("block:x", "rows", "col"):
            with pytest.raises(InvalidConfigError):
                parse_family(bad)


class TestDatasetSpec:
    def test_labels(self):
        assert gen_dataset(20, 8).label == "gen:20x8"
        assert gen_dataset(9, 4, spd=True).label == "gen:9x4:spd"
        mtx = skd.DatasetSpec(kind="mtx", path="/tmp/somewhere/foo.mtx")
        assert mtx.label == "mtx:foo.mtx"

    def test_validation(self):
        with pytest.raises(InvalidConfigError):
            skd.DatasetSpec(kind="gen")
        with pytest.raises(InvalidConfigError):
            skd.DatasetSpec(kind="mtx")
        with pytest.raises(InvalidConfigError):
            skd.DatasetSpec(kind="http")


class TestBuildSystem:
    def test_auto_metric_row_general_is_identity(self):
        system = skd.build_system(gen_dataset(12, 5), "row")
        assert system.B_factor.is_identity
        assert system.G_factor.is_identity

    def test_auto_metric_row_spd_is_system(self):
        ds = gen_dataset(12, 5, spd=True)
        system = skd.build_system(ds, "row")
        assert not system.B_factor.is_identity
        assert np.array_equal(system.B, system.A)
        assert system.g_equals_b

    def test_auto_metric_lsqcol_is_normal(self):
        system = skd.build_system(gen_dataset(12, 5), "lsqcol")
        assert np.allclose(system.B, system.A.T @ system.A, atol=1e-12)

    def test_spectral_on_general_matrix_rejected(self):
        with pytest.raises(InvalidConfigError):
            skd.build_system(gen_dataset(12, 5), "spectral")

    def test_explicit_identity_overrides(self):
        system = skd.build_system(gen_dataset(12, 5, spd=True), "row",
                                  metric="identity")
        assert system.B_factor.is_identity

    def test_unknown_metric(self):
        with pytest.raises(InvalidConfigError):
            skd.build_system(gen_dataset(12, 5), "row", metric="fancy")

    def test_mtx_dataset_with_row_limit(self, tmp_path):
        path = tmp_path / "tiny.mtx"
        path.write_text(
            "%%MatrixMarket matrix coordinate real general\n"
            "4 2 8\n"
            "1 1 1.0\n1 2 2.0\n2 1 3.0\n2 2 4.0\n"
            "3 1 5.0\n3 2 6.0\n4 1 7.0\n4 2 8.0\n"
        )
        ds = skd.DatasetSpec(kind="mtx", path=str(path), m_limit=3)
        system = skd.build_system(ds, "row")
        assert system.A.shape == (3, 2)
        assert system.residual_norm(system.x_star) == pytest.approx(0.0,
                                                                    abs=1e-12)

    def test_libsvm_dataset(self, tmp_path):
        path = tmp_path / "tiny.svm"
        path.write_text("1 1:2.0 3:1.0\n-1 2:5.0\n1 1:1.0 2:1.0\n")
        ds = skd.DatasetSpec(kind="libsvm", path=str(path), m_limit=2)
        system = skd.build_system(ds, "row")
        assert system.A.shape == (2, 3)


class TestPlanValidation:
    def test_rejects_bad_configs(self):
        with pytest.raises(InvalidConfigError):
            small_plan(method="newton").validate()
        with pytest.raises(InvalidConfigError):
            small_plan(datasets=[]).validate()
        with pytest.raises(InvalidConfigError):
            small_plan(rules=[]).validate()
        with pytest.raises(InvalidConfigError):
            small_plan(gammas=[]).validate()
        with pytest.raises(InvalidConfigError):
            small_plan(reps=0).validate()
        with pytest.raises(InvalidConfigError):
            small_plan(workers=0).validate()
        with pytest.raises(InvalidConfigError):
            small_plan(family="diag").validate()

    def test_ssd_refuses_momentum(self):
        with pytest.raises(InvalidConfigError, match="ssdm"):
            small_plan(gammas=[0.0, 0.4]).validate()
        small_plan(method="ssdm", gammas=[0.0, 0.4]).validate()

    def test_cells_cross_product_and_order(self):
        plan = small_plan(
            method="ssdm",
            datasets=[gen_dataset(20, 8, seed=3), gen_dataset(10, 4, seed=4)],
            rules=[skd.parse_rule("uniform"), skd.parse_rule("greedy:3")],
            gammas=[0.0, 0.4],
        )
        cells = plan.cells()
        assert len(cells) == 8
        assert cells[0][0].label == "gen:20x8"
        assert [g for _, _, g in cells[:4]] == [0.0, 0.4, 0.0, 0.4]

    def test_classical_methods_collapse_cells(self):
        plan = small_plan(method="cg",
                          datasets=[gen_dataset(8, 8, spd=True)],
                          rules=[skd.parse_rule("uniform"),
                                 skd.parse_rule("greedy:3")])
        assert len(plan.cells()) == 1


class TestRunExperiment:
    def test_single_cell_matches_direct_solver_run(self):
        plan = small_plan(reps=1)
        result = skd.run_experiment(plan)
        assert len(result.rows) == 1
        row = result.rows[0]

        ds = plan.datasets[0]
        system = skd.build_system(ds, "row")
        fam = skd.SketchFamily("row", system)
        seed = derive_seed(plan.seed, ds.label, "uniform", repr(0.0), 0)
        assert row.rep_seeds == [seed]
        cfg = skd.SolverConfig(omega=1.0, tol=plan.tol,
                               max_iters=plan.max_iters, seed=seed,
                               x0=plan.x0, check_every=plan.check_every)
        trace = skd.run_ssd(system, fam, skd.parse_rule("uniform"), cfg)
        assert np.array_equal(row.series_k, trace.ks)
        assert np.array_equal(row.series_residual, trace.residuals)
        assert np.array_equal(row.series_relerr, trace.rel_errors)
        assert row.mean_iters == trace.iterations
        assert row.mean_final_residual == trace.residuals[-1]
        assert row.success == 1 and row.diverged == 0

    def test_momentum_zero_row_equals_plain_method(self):
        ssdm = skd.run_experiment(small_plan(method="ssdm",
                                             gammas=[0.0, 0.2]))
        ssd = skd.run_experiment(small_plan())
        zero_row = [r for r in ssdm.rows if r.gamma == 0.0][0]
        plain = ssd.rows[0]
        assert np.array_equal(zero_row.series_residual, plain.series_residual)
        assert np.array_equal(zero_row.series_relerr, plain.series_relerr)
        assert zero_row.mean_iters == plain.mean_iters
        assert zero_row.rep_seeds == plain.rep_seeds

    def test_sd_and_cg_rows_use_placeholder_family(self):
        plan = small_plan(method="sd", datasets=[gen_dataset(40, 10,
                                                             spd=True)],
                          tol=1e-6)
        result = skd.run_experiment(plan)
        assert result.rows[0].family == "-"
        assert result.rows[0].rule == "-"
        assert result.rows[0].success == plan.reps

    def test_workers_do_not_change_results(self):
        kwargs = dict(method="ssdm",
                      datasets=[gen_dataset(16, 6, seed=9)],
                      rules=[skd.parse_rule("uniform"),
                             skd.parse_rule("greedy:4")],
                      gammas=[0.0, 0.1], reps=2, max_iters=500)
        serial = skd.run_experiment(small_plan(**kwargs))
        parallel = skd.run_experiment(small_plan(**kwargs, workers=2))
        assert len(serial.rows) == len(parallel.rows) == 4
        for a, b in zip(serial.rows, parallel.rows):
            assert a.rule == b.rule and a.gamma == b.gamma
            assert a.rep_seeds == b.rep_seeds
            assert np.array_equal(a.series_residual, b.series_residual)
            assert np.array_equal(a.series_relerr, b.series_relerr)
            assert a.mean_final_residual == b.mean_final_residual

    def test_divergent_cell_counted_and_flagged(self):
        plan = small_plan(method="ssdm", gammas=[1.5], reps=2,
                          max_iters=3000, check_every=None)
        result = skd.run_experiment(plan)
        row = result.rows[0]
        assert row.diverged == 2
        assert row.success == 0
        assert np.isnan(row.mean_iters)
        assert result.any_diverged

    def test_theory_reports_attached_or_skipped(self):
        plan = small_plan(theory=True)
        result = skd.run_experiment(plan)
        key = "gen:20x8|uniform"
        assert key in result.reports
        assert "kind=row" in result.reports[key]

        big = small_plan(datasets=[skd.DatasetSpec(
            kind="gen", gen=skd.GenSpec("gaussian", 5, 501))],
            max_iters=5, theory=True, tol=0.0)
        out = skd.run_experiment(big)
        assert out.reports["gen:5x501|uniform"].startswith("skipped:")


class TestEmit:
    def test_csv_round_trip_and_schema(self, tmp_path):
        plan = small_plan(method="ssdm", gammas=[0.0, 0.3], reps=2)
        result = skd.run_experiment(plan)
        path = tmp_path / "out.csv"
        skd.emit_csv(result, path)
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 2
        for parsed, row in zip(rows, result.rows):
            assert parsed["dataset"] == row.dataset
            assert float(parsed["gamma"]) == row.gamma
            assert float(parsed["mean_final_residual"]) == \
                row.mean_final_residual
            assert float(parsed["mean_final_relerr"]) == row.mean_final_relerr
            assert int(parsed["success"]) == row.success
        meta = (tmp_path / "out.csv.meta").read_text()
        assert "rep_seeds" in meta
        assert "nondeterministic_columns=mean_time_s:walltime" in meta

    def test_two_runs_identical_without_walltime(self, tmp_path):
        for tag in ("a", "b"):
            plan = small_plan(method="ssdm", gammas=[0.0, 0.3], reps=2)
            result = skd.run_experiment(plan)
            skd.emit_csv(result, tmp_path / f"{tag}.csv")
            skd.emit_plot_data(result, tmp_path / f"series_{tag}")
        assert strip_walltime(tmp_path / "a.csv") == \
            strip_walltime(tmp_path / "b.csv")
        series_a = sorted((tmp_path / "series_a").iterdir())
        series_b = sorted((tmp_path / "series_b").iterdir())
        assert [p.name for p in series_a] == [p.name for p in series_b]
        for pa, pb in zip(series_a, series_b):
            assert strip_walltime(pa) == strip_walltime(pb)

    def test_plot_data_one_file_per_cell(self, tmp_path):
        plan = small_plan(method="ssdm", gammas=[0.0, 0.3],
                          rules=[skd.parse_rule("uniform"),
                                 skd.parse_rule("greedy:4")])
        result = skd.run_experiment(plan)
        out = tmp_path / "series"
        skd.emit_plot_data(result, out)
        files = sorted(p.name for p in out.iterdir())
        assert len(files) == 4
        assert all(name.endswith(".csv") for name in files)
        # series names must be filesystem-safe even with rule punctuation
        assert not any(":" in name.replace(".csv", "") for name in files)
        body = (out / files[0]).read_text().splitlines()
        assert body[0] == "k,residual,relerr,time:walltime"
        first = body[1].split(",")
        assert first[0] == "0"
        float(first[1]), float(first[2]), float(first[3])
