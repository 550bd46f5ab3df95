import csv

import numpy as np
import pytest

from pmno.cli import main
from pmno.config import REQUIRED_KEYS, dump_config, load_config, parse_pairs
from pmno.errors import ConfigError
from pmno.io import read_grid_file, read_manifest

BASE = {
    "system": "advection2d",
    "k": "2",
    "dt": "0.02",
    "L": "3",
    "epochs": "3",
    "epsilon_causal": "1.0",
    "lr0": "1e-3",
    "lr_decay_every": "200",
    "lr_decay_rate": "0.99",
    "seed": "0",
    "grid": "16",
    "n_samples": "100",
    "backbone": "fno",
    "modes": "4",
    "width": "4",
    "tau": "0.1",
}


@pytest.fixture
def cfg_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# desk toy\n" + "".join(f"{k} = {v}\n" for k, v in BASE.items()) + "eval_steps = 6\n")
    return path


class TestConfig:
    def test_parse_and_types(self, cfg_file):
        cfg = load_config(cfg_file)
        assert cfg.k == 2 and isinstance(cfg.k, int)
        assert cfg.dt == 0.02 and cfg.backbone == "fno"

    def test_overrides(self, cfg_file):
        cfg = load_config(cfg_file, ["k=4", "epsilon_causal = 2.5"])
        assert cfg.k == 4 and cfg.epsilon_causal == 2.5

    def test_missing_key(self, tmp_path):
        p = tmp_path / "c.cfg"
        p.write_text("system = advection2d\n")
        with pytest.raises(ConfigError, match="missing"):
            load_config(p)

    @pytest.mark.parametrize(
        "override", ["k=7", "k=0", "L=0", "backbone=cnn", "system=nls3d", "dt=abc", "colour=red", "dt=-1"]
    )
    def test_invalid(self, cfg_file, override):
        with pytest.raises(ConfigError):
            load_config(cfg_file, [override])

    def test_malformed_line(self):
        with pytest.raises(ConfigError):
            parse_pairs(["just words"])

    def test_dump_round_trip(self, cfg_file, tmp_path):
        cfg = load_config(cfg_file)
        p = tmp_path / "dump.cfg"
        p.write_text(dump_config(cfg))
        assert load_config(p) == cfg

    def test_required_keys(self):
        assert set(REQUIRED_KEYS) == set(BASE)


class TestCli:
    def test_config_error_exit_code(self, cfg_file, tmp_path, capsys):
        assert main(["train", "--config", str(cfg_file), "--set", "k=9", "--out", str(tmp_path / "o")]) == 2
        assert "config error" in capsys.readouterr().err

    def test_numerical_abort_exit_code(self, cfg_file, tmp_path):
        out = tmp_path / "o"
        assert main(["train", "--config", str(cfg_file), "--set", "lr0=1e6", "--set", "epochs=20", "--out", str(out)]) == 3
        assert (out / "diverged.ckpt").exists()

    def test_pipeline(self, cfg_file, tmp_path):
        data = tmp_path / "data"
        assert main(["gen-data", "--config", str(cfg_file), "--out", str(data)]) == 0
        man = read_manifest(data / "manifest.txt")
        assert man["system"] == "advection2d" and int(man["count"]) == 8
        assert (data / "run_manifest.txt").exists()

        run = tmp_path / "run"
        assert main(["train", "--config", str(cfg_file), "--data", str(data), "--out", str(run)]) == 0
        with open(run / "loss.csv") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["epoch", "total_loss", "lr"] and len(rows) == 4
        assert read_manifest(run / "run_manifest.txt")["seed"] == "0"

        roll = tmp_path / "roll"
        assert main(["rollout", "--checkpoint", str(run / "final.ckpt"), "--steps", "4", "--grid", "32", "--out", str(roll)]) == 0
        assert read_grid_file(roll / "pred_00003.pmno").shape == (32, 32, 1)

        ev = tmp_path / "eval"
        assert main(["eval", "--checkpoint", str(run / "final.ckpt"), "--out", str(ev)]) == 0
        with open(ev / "error_curve.csv") as fh:
            curve = list(csv.reader(fh))
        assert curve[0] == ["t", "epsilon"] and len(curve) == 7
        assert float(curve[1][0]) == pytest.approx(0.04)

    def test_sweep_rows_and_determinism(self, cfg_file, tmp_path):
        outs = []
        for name in ("a", "b"):
            out = tmp_path / name
            args = ["sweep", "--config", str(cfg_file), "--axis", "L", "--values", "2,3,4", "--seeds", "0,1", "--out", str(out)]
            assert main(args) == 0
            outs.append((out / "sweep.csv").read_bytes())
        assert outs[0] == outs[1]
        rows = list(csv.reader(outs[0].decode().splitlines()))
        assert rows[0] == ["setting", "final_loss", "T_v", "status"]
        assert [r[0] for r in rows[1:]] == ["L=2", "L=3", "L=4"]

    def test_parallel_sweep_matches_serial(self, cfg_file, tmp_path):
        outs = []
        for workers in ("1", "2"):
            out = tmp_path / f"w{workers}"
            args = ["sweep", "--config", str(cfg_file), "--axis", "k", "--values", "1,2", "--seeds", "0,1",
                    "--workers", workers, "--out", str(out)]
            assert main(args) == 0
            outs.append((out / "sweep.csv").read_bytes())
        assert outs[0] == outs[1]

    def test_sweep_records_failures(self, cfg_file, tmp_path):
        out = tmp_path / "s"
        args = ["sweep", "--config", str(cfg_file), "--set", "lr0=1e6", "--set", "epochs=20",
                "--axis", "k", "--values", "1,2", "--seeds", "0", "--out", str(out)]
        assert main(args) == 0
        rows = list(csv.reader((out / "sweep.csv").read_text().splitlines()))
        assert [r[3] for r in rows[1:]] == ["failed", "failed"]
