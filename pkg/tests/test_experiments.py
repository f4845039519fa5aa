import json
from pathlib import Path

import numpy as np
import pytest

from ehdetect import cli
from ehdetect.config import (ExperimentConfig, default_config, from_dict, load,
                             parse_pav)
from ehdetect.errors import ConfigError, ConvergenceError
from ehdetect.experiments import (run_battery_figure, run_optimize, run_roc,
                                  run_sweep, run_validation)


class TestConfig:
    def test_parse_pav_db_suffix(self):
        assert parse_pav("1 dB") == pytest.approx(10.0 ** 0.1)
        assert parse_pav("3dB") == pytest.approx(10.0 ** 0.3)
        assert parse_pav("-2.5 dB") == pytest.approx(10.0 ** -0.25)
        assert parse_pav(2.0) == 2.0

    @pytest.mark.parametrize("bad", ["no unit", "dB", -1.0, 0.0, None, True])
    def test_parse_pav_rejects(self, bad):
        with pytest.raises(ConfigError):
            parse_pav(bad)

    def test_round_trip_identity(self, tiny_cfg):
        again = from_dict(json.loads(tiny_cfg.to_json()))
        assert again == tiny_cfg
        assert again.config_hash() == tiny_cfg.config_hash()

    def test_load_from_file(self, tiny_cfg, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(tiny_cfg.to_json())
        assert load(p) == tiny_cfg

    def test_length_mismatch_rejected(self, tiny_cfg):
        data = tiny_cfg.to_dict()
        data["channels"] = data["channels"][:1]
        with pytest.raises(ConfigError):
            from_dict(data)

    def test_missing_seed_rejected(self, tiny_cfg):
        data = tiny_cfg.to_dict()
        del data["seed"]
        with pytest.raises(ConfigError):
            from_dict(data)

    def test_sweep_must_increase(self, tiny_cfg):
        data = tiny_cfg.to_dict()
        data["sweep"] = {"axis": "pav", "values": [1.0, 1.0]}
        with pytest.raises(ConfigError):
            from_dict(data)
        data["sweep"] = {"axis": "bogus", "values": [1.0, 2.0]}
        with pytest.raises(ConfigError):
            from_dict(data)

    def test_invalid_json_rejected(self, tmp_path):
        p = tmp_path / "broken.json"
        p.write_text("{nope")
        with pytest.raises(ConfigError):
            load(p)

    def test_default_config_is_benchmark(self):
        cfg = default_config()
        assert cfg.size == 3
        assert [c.gain_mean for c in cfg.channels] == [1.5, 0.8, 1.4]
        assert [s.gain_var for s in cfg.sensors] == [1.3, 2.0, 0.9]
        assert [c.fc_noise_var for c in cfg.channels] == [0.9, 1.2, 0.8]
        assert cfg.pav_target == pytest.approx(10.0 ** 0.1)


def read_csv_rows(path: Path):
    lines = path.read_text().splitlines()
    assert lines[0].startswith("# config_hash=")
    assert lines[1].startswith("# seed=")
    header = lines[2].split(",")
    return header, [ln.split(",") for ln in lines[3:]]


class TestRunners:
    def test_battery_figure_tables(self, tiny_cfg, tmp_path):
        cdf_rows, pmf_rows = run_battery_figure(tiny_cfg, tmp_path, plots=True)
        header, rows = read_csv_rows(tmp_path / "battery_cdf.csv")
        assert header == ["capacity", "harvest_prob", "state", "pmf", "cdf"]
        # one block per harvest probability, each ending at cdf 1
        for pe in tiny_cfg.battery_harvest_probs:
            block = [r for r in cdf_rows if r[1] == pe]
            assert len(block) == tiny_cfg.capacity + 1
            assert block[-1][4] == pytest.approx(1.0, abs=1e-10)
        assert (tmp_path / "battery_cdf.png").exists()
        assert (tmp_path / "battery_pmf.png").exists()
        assert (tmp_path / "battery_cdf.meta.json").exists()
        # alternate panel uses its own capacity
        assert pmf_rows[0][0] == tiny_cfg.battery_alt[0]

    def test_roc_monotone_and_dominant(self, tiny_cfg, tmp_path):
        rows = run_roc(tiny_cfg, tmp_path, plots=False)
        k = tiny_cfg.size
        by_scheme = {}
        for r in rows:
            by_scheme.setdefault(r[0], []).append(r)
        for scheme, block in by_scheme.items():
            block.sort(key=lambda r: r[1])
            pd_closed = [r[2 + k] for r in block]
            assert all(b >= a - 1e-12 for a, b in zip(pd_closed, pd_closed[1:])), \
                scheme
        for a in tiny_cfg.false_alarm_grid:
            per = next(r for r in by_scheme["scheme1"] if r[1] == a)
            com = next(r for r in by_scheme["scheme1-common"] if r[1] == a)
            assert per[2 + k] >= com[2 + k] - 1e-9

    def test_sweep_single_point_consistent_with_roc(self, tiny_cfg, tmp_path):
        roc_rows = run_roc(tiny_cfg, tmp_path / "roc", plots=False)
        sweep_cfg = tiny_cfg.with_updates(sweep={"axis": "pav", "values": [1.0]})
        sweep_rows = run_sweep(sweep_cfg, "pav", tmp_path / "sweep", plots=False)
        k = tiny_cfg.size
        roc_s1 = next(r for r in roc_rows if r[0] == "scheme1" and r[1] == 0.5)
        sw_s1 = next(r for r in sweep_rows if r[2] == "scheme1")
        np.testing.assert_allclose(sw_s1[4:4 + k], roc_s1[2:2 + k], rtol=1e-12)
        assert sw_s1[4 + k] == pytest.approx(roc_s1[2 + k], rel=1e-12)  # pd_closed
        assert sw_s1[7 + k] == pytest.approx(roc_s1[5 + k], rel=1e-12)  # pd_emp

    def test_sweep_axis_validation(self, tiny_cfg, tmp_path):
        with pytest.raises(ConfigError):
            run_sweep(tiny_cfg, "bogus", tmp_path)

    def test_optimize_writes_summary(self, tiny_cfg, tmp_path):
        res = run_optimize(tiny_cfg, "2", tmp_path)
        data = json.loads((tmp_path / "optimize.json").read_text())
        assert data["scheme"] == "scheme2-gauss"
        assert len(data["thetas"]) == tiny_cfg.size
        assert data["config_hash"] == tiny_cfg.config_hash()
        assert (tmp_path / "optimize.csv").exists()
        assert res.evaluations == tiny_cfg.size * tiny_cfg.theta_grid_points

    def test_validation_report(self, tiny_cfg, tmp_path):
        rows = run_validation(tiny_cfg, tmp_path)
        header, _ = read_csv_rows(tmp_path / "validation.csv")
        assert header == ["group", "check", "observed", "reference",
                          "tolerance", "status"]
        gated = [r for r in rows if r[5] in ("pass", "FAIL")]
        assert gated and all(r[5] == "pass" for r in gated)
        assert any(r[5] == "info" for r in rows)


class TestDeterminism:
    def test_battery_csv_byte_identical(self, tiny_cfg, tmp_path):
        run_battery_figure(tiny_cfg, tmp_path / "a", plots=False)
        run_battery_figure(tiny_cfg, tmp_path / "b", plots=False)
        for name in ("battery_cdf.csv", "battery_pmf.csv"):
            assert (tmp_path / "a" / name).read_bytes() == \
                (tmp_path / "b" / name).read_bytes()

    def test_validation_byte_identical(self, tiny_cfg, tmp_path):
        run_validation(tiny_cfg, tmp_path / "a")
        run_validation(tiny_cfg, tmp_path / "b")
        assert (tmp_path / "a" / "validation.csv").read_bytes() == \
            (tmp_path / "b" / "validation.csv").read_bytes()


class TestCli:
    def _write_cfg(self, cfg, tmp_path):
        p = tmp_path / "cfg.json"
        p.write_text(cfg.to_json())
        return str(p)

    def test_battery_dist_command(self, tiny_cfg, tmp_path):
        cfg_path = self._write_cfg(tiny_cfg, tmp_path)
        rc = cli.main(["battery-dist", "--config", cfg_path,
                       "--out", str(tmp_path / "out"), "--no-plots"])
        assert rc == 0
        assert (tmp_path / "out" / "battery_cdf.csv").exists()

    def test_optimize_command(self, tiny_cfg, tmp_path):
        cfg_path = self._write_cfg(tiny_cfg, tmp_path)
        rc = cli.main(["optimize", "--scheme", "2c", "--config", cfg_path,
                       "--out", str(tmp_path / "out"), "--no-plots"])
        assert rc == 0
        assert (tmp_path / "out" / "optimize.json").exists()

    def test_config_error_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps({"sensors": []}))
        rc = cli.main(["roc", "--config", str(bad), "--out", str(tmp_path)])
        assert rc == 2

    def test_seed_and_trials_override(self, tiny_cfg, tmp_path, monkeypatch):
        cfg_path = self._write_cfg(tiny_cfg, tmp_path)
        seen = {}

        def fake_run(cfg, out, plots=True):
            seen["seed"] = cfg.seed
            seen["trials"] = cfg.trials
            return [], []

        monkeypatch.setattr("ehdetect.experiments.run_battery_figure", fake_run)
        rc = cli.main(["battery-dist", "--config", cfg_path, "--seed", "99",
                       "--trials", "20000", "--out", str(tmp_path)])
        assert rc == 0
        assert seen == {"seed": 99, "trials": 20000}

    def test_convergence_error_exit_code(self, tiny_cfg, tmp_path, monkeypatch):
        cfg_path = self._write_cfg(tiny_cfg, tmp_path)

        def boom(cfg, out, plots=True):
            raise ConvergenceError("stub")

        monkeypatch.setattr("ehdetect.experiments.run_battery_figure", boom)
        rc = cli.main(["battery-dist", "--config", cfg_path,
                       "--out", str(tmp_path)])
        assert rc == 3
