import json

import numpy as np
import pytest

from mafm.cli import main, read_panel_csv, write_panel_csv
from mafm.linalg import Basis, subspace_distance
from mafm.synth import SimConfig, simulate


def _write_sim_config(path, **overrides):
    doc = dict(d1=15, d2=12, r1=2, r2=2, n=80, sigma_eps=1.0, seed=7)
    doc.update(overrides)
    path.write_text(json.dumps(doc))
    return doc


def _files(out_dir):
    return {p.name: p.read_bytes() for p in sorted(out_dir.iterdir())}


@pytest.fixture()
def sim_dir(tmp_path):
    cfg = tmp_path / "sim.json"
    _write_sim_config(cfg)
    out = tmp_path / "sim_out"
    assert main(["simulate", "--config", str(cfg), "--out", str(out)]) == 0
    return out


class TestPanelIo:
    def test_round_trip(self, tmp_path):
        x = np.random.default_rng(0).standard_normal((6, 4, 3))
        path = tmp_path / "panel.csv"
        write_panel_csv(path, x)
        assert np.array_equal(read_panel_csv(str(path)), x)

    def test_unbalanced_panel_rejected(self, tmp_path):
        path = tmp_path / "panel.csv"
        path.write_text("t,row,col,value\n0,0,0,1.0\n0,0,1,2.0\n1,0,0,3.0\n")
        from mafm.cli import ConfigError

        with pytest.raises(ConfigError, match="not balanced"):
            read_panel_csv(str(path))

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "panel.csv"
        path.write_text("time,unit,series,value\n0,0,0,1.0\n")
        from mafm.cli import ConfigError

        with pytest.raises(ConfigError, match="header"):
            read_panel_csv(str(path))

    def test_slice_directory(self, tmp_path):
        d = tmp_path / "slices"
        d.mkdir()
        rng = np.random.default_rng(1)
        mats = [rng.standard_normal((3, 4)) for _ in range(5)]
        names = []
        for k, m in enumerate(mats):
            name = f"slice_{k}.csv"
            np.savetxt(d / name, m, delimiter=",")
            names.append(name)
        (d / "manifest.json").write_text(json.dumps({"slices": names}))
        from mafm.cli import read_panel

        x = read_panel(str(d))
        assert x.shape == (5, 3, 4)
        assert np.allclose(x[2], mats[2])


class TestSimulateCommand:
    def test_outputs_and_bitwise_rerun(self, tmp_path):
        cfg = tmp_path / "sim.json"
        _write_sim_config(cfg)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out2)]) == 0
        names = {
            "panel.csv",
            "truth_loading_a.csv",
            "truth_loading_b.csv",
            "truth_factors_f.csv",
            "truth_factors_g.csv",
            "manifest.json",
        }
        assert set(_files(out1)) == names
        for name in names - {"manifest.json"}:
            assert _files(out1)[name] == _files(out2)[name]

    def test_delta_ordering_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "sim.json"
        _write_sim_config(cfg, delta0=0.5, delta1=0.2)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "delta0" in capsys.readouterr().err

    def test_rank_complement_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "sim.json"
        _write_sim_config(cfg, r1=12)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 2
        assert "complement" in capsys.readouterr().err

    def test_missing_config_exit_3(self, tmp_path):
        assert main(["simulate", "--config", str(tmp_path / "nope.json"),
                     "--out", str(tmp_path / "o")]) == 3

    def test_seed_override_changes_panel(self, tmp_path):
        cfg = tmp_path / "sim.json"
        _write_sim_config(cfg)
        out1, out2 = tmp_path / "o1", tmp_path / "o2"
        assert main(["simulate", "--config", str(cfg), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(cfg), "--out", str(out2),
                     "--seed", "99"]) == 0
        assert _files(out1)["panel.csv"] != _files(out2)["panel.csv"]


class TestFitCommand:
    def test_recovers_truth_within_golden_threshold(self, sim_dir, tmp_path):
        out = tmp_path / "fit_out"
        assert main(["fit", "--data", str(sim_dir / "panel.csv"),
                     "--ranks", "2,2", "--out", str(out)]) == 0
        est = Basis(np.loadtxt(out / "loading_a.csv", delimiter=",", ndmin=2))
        a = np.loadtxt(sim_dir / "truth_loading_a.csv", delimiter=",", ndmin=2)
        truth = Basis(np.linalg.svd(a, full_matrices=False)[0])
        # 0.05 is the frozen regression bound for this cell: a 100-replicate
        # run of (d, n) = (20, 100) strong-regime fits peaks near 0.021.
        assert subspace_distance(est, truth) < 0.05

    def test_mine_method_has_empty_trace(self, sim_dir, tmp_path):
        out = tmp_path / "fit_mine"
        assert main(["fit", "--data", str(sim_dir / "panel.csv"),
                     "--ranks", "2,2", "--method", "mine", "--out", str(out)]) == 0
        assert (out / "trace.csv").read_text().strip() == "iteration,delta_b,delta_a"
        stats = json.loads((out / "stats.json").read_text())
        assert stats["iterations"] == 0

    def test_loose_eps_converges_no_slower(self, sim_dir, tmp_path):
        iters = {}
        for eps in ("1e-4", "1e-10"):
            out = tmp_path / f"fit_{eps}"
            assert main(["fit", "--data", str(sim_dir / "panel.csv"),
                         "--ranks", "2,2", "--eps", eps, "--out", str(out)]) == 0
            iters[eps] = json.loads((out / "stats.json").read_text())["iterations"]
        assert iters["1e-4"] <= iters["1e-10"]

    def test_zero_panel_exit_4(self, tmp_path):
        panel = tmp_path / "panel.csv"
        write_panel_csv(panel, np.zeros((10, 6, 5)))
        assert main(["fit", "--data", str(panel), "--ranks", "2,2",
                     "--out", str(tmp_path / "o")]) == 4

    def test_partial_complement_method(self, sim_dir, tmp_path):
        out = tmp_path / "fit_pc"
        assert main(["fit", "--data", str(sim_dir / "panel.csv"),
                     "--ranks", "2,2", "--method", "pcompas",
                     "--s1", "6", "--s2", "5", "--out", str(out)]) == 0
        stats = json.loads((out / "stats.json").read_text())
        assert stats["method"] == "pcompas"

    def test_pcompas_requires_slice_sizes(self, sim_dir, tmp_path):
        assert main(["fit", "--data", str(sim_dir / "panel.csv"),
                     "--ranks", "2,2", "--method", "pcompas",
                     "--out", str(tmp_path / "o")]) == 2

    def test_bad_ranks_exit_2(self, sim_dir, tmp_path):
        assert main(["fit", "--data", str(sim_dir / "panel.csv"),
                     "--ranks", "2", "--out", str(tmp_path / "o")]) == 2


class TestInferCommand:
    @pytest.fixture()
    def fit_dir(self, sim_dir, tmp_path):
        out = tmp_path / "fit_out"
        assert main(["fit", "--data", str(sim_dir / "panel.csv"),
                     "--ranks", "2,2", "--out", str(out)]) == 0
        return out

    def test_csv_has_expected_columns(self, sim_dir, fit_dir, tmp_path):
        out = tmp_path / "infer_out"
        assert main(["infer", "--data", str(sim_dir / "panel.csv"),
                     "--fit", str(fit_dir), "--mode", "A", "--rows", "0,3",
                     "--level", "0.95", "--out", str(out)]) == 0
        lines = (out / "infer_A.csv").read_text().strip().splitlines()
        assert len(lines) == 3
        # row, level, flagged plus r estimates and r standard errors
        assert len(lines[0].split(",")) == 2 * 2 + 3
        doc = json.loads((out / "infer_A.json").read_text())
        assert len(doc["rows"]) == 2
        first = doc["rows"][0]
        assert np.all(np.asarray(first["ci_lo"]) < np.asarray(first["estimate"]))

    def test_bad_level_exit_2(self, sim_dir, fit_dir, tmp_path):
        assert main(["infer", "--data", str(sim_dir / "panel.csv"),
                     "--fit", str(fit_dir), "--rows", "0", "--level", "1.2",
                     "--out", str(tmp_path / "o")]) == 2

    def test_pure_noise_never_silent_nonsense(self, tmp_path):
        rng = np.random.default_rng(3)
        panel = tmp_path / "noise.csv"
        write_panel_csv(panel, rng.standard_normal((60, 12, 10)))
        fit_out = tmp_path / "fit_noise"
        assert main(["fit", "--data", str(panel), "--ranks", "2,2",
                     "--out", str(fit_out)]) == 0
        out = tmp_path / "infer_noise"
        code = main(["infer", "--data", str(panel), "--fit", str(fit_out),
                     "--rows", "0", "--out", str(out)])
        assert code in (0, 5)
        if code == 0:
            doc = json.loads((out / "infer_A.json").read_text())
            assert "flagged" in doc["rows"][0]


class TestExperimentCommand:
    def _config(self, tmp_path, **overrides):
        doc = dict(
            kind="error",
            dims=[[12, 10]],
            sample_sizes=[40],
            regimes=[[0.0, 0.0]],
            ranks=[2, 2],
            replicates=3,
            seed=11,
        )
        doc.update(overrides)
        path = tmp_path / "grid.json"
        path.write_text(json.dumps(doc))
        return path

    def test_smoke_grid_row_counts(self, tmp_path):
        cfg = self._config(tmp_path)
        out = tmp_path / "exp"
        assert main(["experiment", "--config", str(cfg), "--out", str(out)]) == 0
        lines = (out / "errors.csv").read_text().strip().splitlines()
        assert lines[0] == "d1,d2,n,delta0,delta1,method,mode,replicate,value"
        assert len(lines) == 1 + 3 * 3 * 2

    def test_jobs_do_not_change_bytes(self, tmp_path):
        cfg = self._config(tmp_path)
        out1, out2 = tmp_path / "j1", tmp_path / "j2"
        assert main(["experiment", "--config", str(cfg), "--out", str(out1),
                     "--jobs", "1"]) == 0
        assert main(["experiment", "--config", str(cfg), "--out", str(out2),
                     "--jobs", "2"]) == 0
        assert _files(out1)["errors.csv"] == _files(out2)["errors.csv"]

    def test_unknown_method_exit_2(self, tmp_path):
        cfg = self._config(tmp_path, methods=["NEWTON"])
        assert main(["experiment", "--config", str(cfg),
                     "--out", str(tmp_path / "o")]) == 2

    def test_normality_kind(self, tmp_path):
        doc = {
            "kind": "normality",
            "config": dict(d1=12, d2=10, r1=2, r2=2, n=60, seed=5),
            "replicates": 5,
            "pivot": "plugin",
        }
        cfg = tmp_path / "norm.json"
        cfg.write_text(json.dumps(doc))
        out = tmp_path / "norm_out"
        assert main(["experiment", "--config", str(cfg), "--out", str(out)]) == 0
        assert len((out / "pivots.csv").read_text().strip().splitlines()) == 6
        summary = json.loads((out / "summary.json").read_text())
        assert summary["successes"] == 5

    def test_coverage_all_failed_exit_6(self, tmp_path):
        doc = {
            "kind": "coverage",
            "config": dict(d1=12, d2=10, r1=2, r2=2, n=50, sigma_eps=0.0, seed=5),
            "replicates": 3,
            "level": 0.95,
        }
        cfg = tmp_path / "cov.json"
        cfg.write_text(json.dumps(doc))
        out = tmp_path / "cov_out"
        assert main(["experiment", "--config", str(cfg), "--out", str(out)]) == 6
        summary = json.loads((out / "summary.json").read_text())
        assert summary["coverage_undefined"] is True


class TestForecastCommand:
    def test_horizon_keys_and_bitwise_rerun(self, tmp_path):
        cfg = SimConfig(d1=10, d2=8, r1=2, r2=1, n=70, seed=21)
        x, _ = simulate(cfg)
        panel = tmp_path / "panel.csv"
        write_panel_csv(panel, x)
        out1, out2 = tmp_path / "f1", tmp_path / "f2"
        argv = ["forecast", "--data", str(panel), "--ranks", "2,1",
                "--w0", "55", "--horizons", "5,10", "--min-window", "30"]
        assert main(argv + ["--out", str(out1)]) == 0
        assert main(argv + ["--out", str(out2)]) == 0
        report = json.loads((out1 / "forecast.json").read_text())
        assert set(report["fe_bar"]) == {"5", "10"}
        assert _files(out1)["forecast.json"] == _files(out2)["forecast.json"]
        assert _files(out1)["fe.csv"] == _files(out2)["fe.csv"]

    def test_w0_past_end_exit_2(self, tmp_path):
        cfg = SimConfig(d1=8, d2=6, r1=1, r2=1, n=50, seed=22)
        x, _ = simulate(cfg)
        panel = tmp_path / "panel.csv"
        write_panel_csv(panel, x)
        assert main(["forecast", "--data", str(panel), "--ranks", "1,1",
                     "--w0", "50", "--min-window", "10",
                     "--out", str(tmp_path / "o")]) == 2


class TestRankCommand:
    def test_rank_outputs(self, sim_dir, tmp_path):
        out = tmp_path / "rank_out"
        assert main(["rank", "--data", str(sim_dir / "panel.csv"),
                     "--rmax", "6", "--out", str(out)]) == 0
        doc = json.loads((out / "rank.json").read_text())
        assert len(doc["row_factor_proportions"]) == 6
        lines = (out / "rank.csv").read_text().strip().splitlines()
        assert len(lines) == 7


class TestLogging:
    def test_log_level_from_env(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("MAFM_LOG", "debug")
        cfg = tmp_path / "sim.json"
        _write_sim_config(cfg, d1=6, d2=5, r1=1, r2=1, n=10)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0

    def test_invalid_log_level_warns_and_continues(self, tmp_path, monkeypatch, capsys):
        monkeypatch.setenv("MAFM_LOG", "chatty")
        cfg = tmp_path / "sim.json"
        _write_sim_config(cfg, d1=6, d2=5, r1=1, r2=1, n=10)
        assert main(["simulate", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 0
        assert "MAFM_LOG" in capsys.readouterr().err


class TestManifest:
    def test_digest_stable_under_key_reordering(self, tmp_path):
        cfg1 = tmp_path / "a.json"
        cfg2 = tmp_path / "b.json"
        doc = dict(d1=10, d2=8, r1=1, r2=1, n=30, seed=3)
        cfg1.write_text(json.dumps(doc))
        cfg2.write_text(json.dumps(dict(reversed(list(doc.items())))))
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        assert main(["simulate", "--config", str(cfg1), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(cfg2), "--out", str(out2)]) == 0
        d1 = json.loads((out1 / "manifest.json").read_text())
        d2 = json.loads((out2 / "manifest.json").read_text())
        assert d1["config_digest"] == d2["config_digest"]
        assert d1["tool_version"] == d2["tool_version"]

    def test_digest_changes_with_content(self, tmp_path):
        cfg1, cfg2 = tmp_path / "a.json", tmp_path / "b.json"
        _write_sim_config(cfg1)
        _write_sim_config(cfg2, seed=8)
        out1, out2 = tmp_path / "m1", tmp_path / "m2"
        assert main(["simulate", "--config", str(cfg1), "--out", str(out1)]) == 0
        assert main(["simulate", "--config", str(cfg2), "--out", str(out2)]) == 0
        d1 = json.loads((out1 / "manifest.json").read_text())
        d2 = json.loads((out2 / "manifest.json").read_text())
        assert d1["config_digest"] != d2["config_digest"]
