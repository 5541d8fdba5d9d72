import csv
import io
import json
import subprocess
import sys

import pytest

from d2dcache import analytic
from d2dcache.analytic import SystemParams
from d2dcache.cli import SWEEP_COLUMNS, SweepSpec, UsageError, main

FIG5_ARGS = ["--R", "5", "--N", "100", "--omega", "0.5", "--T", "0.02"]


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestAnalytic:
    def test_table(self, capsys):
        code, out, _ = run(capsys, "analytic", *FIG5_ARGS, "--json")
        assert code == 0
        doc = json.loads(out)
        rates = {row["policy"]: row["rate"] for row in doc["costs"]}
        assert rates["bs"] == 250
        assert rates["simple"] == pytest.approx(150)
        assert rates["2rep"] == pytest.approx(150)
        assert rates["mbr4"] == pytest.approx(180)
        assert len([k for k in rates if k.startswith("mbr")]) == 8
        assert doc["threshold_R"] == 5
        assert doc["best"]["policy"] == "simple"

    def test_text_output(self, capsys):
        code, out, _ = run(capsys, "analytic", *FIG5_ARGS, "--k-max", "2")
        assert code == 0
        assert "threshold R* = 5.0" in out
        assert "mbr3" not in out

    def test_accepts_R_just_above_one(self, capsys):
        code, _, _ = run(capsys, "analytic", "--R", "1.5", "--N", "10", "--omega", "1", "--T", "1")
        assert code == 0

    @pytest.mark.parametrize("bad", [["--T", "0"], ["--R", "0.5"], ["--N", "-3"]])
    def test_invalid_params(self, capsys, bad):
        args = dict(zip(FIG5_ARGS[::2], FIG5_ARGS[1::2]))
        args.update(dict(zip(bad[::2], bad[1::2])))
        code, _, err = run(capsys, "analytic", *[x for kv in args.items() for x in kv])
        assert code == 2
        assert "error" in err

    def test_missing_param(self, capsys):
        code, _, err = run(capsys, "analytic", "--R", "5")
        assert code == 2 and "--N" in err

    def test_config_file(self, capsys, tmp_path):
        cfg = tmp_path / "params.cfg"
        cfg.write_text("# Fig. 5 point\nR = 9\nN=100\nomega = 0.5\nT = 0.02\n")
        code, out, _ = run(capsys, "analytic", "--config", str(cfg), "--R", "5", "--json")
        assert code == 0
        doc = json.loads(out)
        assert doc["params"]["R"] == 5

    def test_config_unknown_key(self, capsys, tmp_path):
        cfg = tmp_path / "params.cfg"
        cfg.write_text("bogus = 1\n")
        code, _, _ = run(capsys, "analytic", "--config", str(cfg))
        assert code == 2

    def test_config_missing_file(self, capsys, tmp_path):
        code, _, _ = run(capsys, "analytic", "--config", str(tmp_path / "nope"))
        assert code == 1


class TestBoundary:
    def test_rows(self, capsys, tmp_path):
        path = tmp_path / "b.csv"
        code, _, _ = run(capsys, "boundary", "--from", "1", "--to", "1000", "--steps", "31", "-o", str(path))
        assert code == 0
        text = path.read_bytes().decode()
        assert "\r" not in text
        rows = list(csv.DictReader(io.StringIO(text)))
        assert len(rows) == 31
        for row in rows:
            load, thr = float(row["load"]), float(row["threshold"])
            assert thr == pytest.approx(3 + 2 / load, rel=1e-12)
        assert float(rows[0]["threshold"]) == 5
        assert float(rows[-1]["threshold"]) == pytest.approx(3, abs=0.01)

    def test_load_two(self, capsys):
        code, out, _ = run(capsys, "boundary", "--from", "2", "--to", "3", "--steps", "2", "--scale", "linear")
        assert code == 0
        assert out.splitlines()[1] == "2.0,4.0"

    def test_unwritable(self, capsys, tmp_path):
        code, _, _ = run(capsys, "boundary", "-o", str(tmp_path / "missing" / "b.csv"))
        assert code == 1


class TestSimulate:
    def test_replication(self, capsys):
        code, out, _ = run(capsys, "simulate", "--policy", "2rep", *FIG5_ARGS, "--seed", "42", "--reps", "20")
        assert code == 0
        doc = json.loads(out)
        assert doc["mean_rate"] == pytest.approx(150, rel=0.05)
        assert doc["config"]["seed"] == 42

    def test_mbr3(self, capsys):
        code, out, _ = run(capsys, "simulate", "--policy", "mbr", "--k", "3", *FIG5_ARGS, "--seed", "42", "--reps", "20")
        assert code == 0
        assert json.loads(out)["mean_rate"] == pytest.approx(175, rel=0.05)

    def test_mbr_requires_k(self, capsys):
        code, _, _ = run(capsys, "simulate", "--policy", "mbr", *FIG5_ARGS)
        assert code == 2

    def test_unknown_policy_is_usage_error(self, capsys):
        with pytest.raises(SystemExit) as exc:
            main(["simulate", "--policy", "lru", *FIG5_ARGS])
        assert exc.value.code == 2

    def test_byte_identical_and_env_seed(self, tmp_path):
        argv = [sys.executable, "-m", "d2dcache", "simulate", "--policy", "simple", *FIG5_ARGS, "--reps", "2",
                "--horizon-mult", "100"]
        env = {"D2DCACHE_SEED": "7", "PATH": ""}
        a = subprocess.run(argv, capture_output=True, env=env, check=True).stdout
        b = subprocess.run(argv, capture_output=True, env=env, check=True).stdout
        assert a == b
        assert json.loads(a)["config"]["seed"] == 7

    def test_trace_and_output(self, capsys, tmp_path):
        out, trace = tmp_path / "s.json", tmp_path / "t.csv"
        code, _, _ = run(capsys, "simulate", "--policy", "2rep", *FIG5_ARGS, "--reps", "1", "--horizon-mult", "20",
                         "-o", str(out), "--trace", str(trace))
        assert code == 0
        doc = json.loads(out.read_text())
        rows = list(csv.DictReader(trace.open()))
        assert rows and set(rows[0]) == {"time", "event_kind", "node_id", "energy_delta", "population"}
        total = sum(float(r["energy_delta"]) for r in rows)
        assert total == pytest.approx(doc["runs"][0]["cost"]["total"])


class TestSweep:
    def sweep(self, capsys, *extra):
        code, out, err = run(capsys, "sweep", *FIG5_ARGS, *extra)
        assert code == 0, err
        return list(csv.DictReader(io.StringIO(out)))

    def test_columns_and_analytic_values(self, capsys):
        rows = self.sweep(capsys, "--param", "R", "--from", "1", "--to", "10", "--steps", "10",
                          "--reps", "2", "--horizon-mult", "200")
        assert tuple(rows[0]) == SWEEP_COLUMNS
        assert len(rows) == 20
        for row in rows:
            p = SystemParams(float(row["value"]), 100, 0.5, 0.02)
            policy = analytic.SimpleCaching() if row["policy"] == "simple" else analytic.Replication2()
            assert float(row["analytic_rate"]) == analytic.analytic_rate(p, policy)
        simple = [float(r["analytic_rate"]) for r in rows if r["policy"] == "simple"]
        assert simple == pytest.approx([25 * R + 25 for R in range(1, 11)])

    def test_fig7_log_sweep(self, capsys):
        rows = self.sweep(capsys, "--param", "T", "--from", "0.001", "--to", "10", "--steps", "5",
                          "--scale", "log", "--reps", "1", "--horizon-mult", "5")
        last = [r for r in rows if r["value"] == "10.0"]
        assert {r["policy"] for r in last} == {"simple", "2rep"}
        for r in last:
            assert float(r["analytic_rate"]) == pytest.approx(50, rel=0.01)

    def test_single_point_matches_simulate(self, capsys):
        rows = self.sweep(capsys, "--param", "R", "--from", "7", "--to", "7", "--steps", "1",
                          "--policies", "simple", "--reps", "3", "--seed", "5", "--horizon-mult", "200")
        code, out, _ = run(capsys, "simulate", "--policy", "simple", "--R", "7", "--N", "100", "--omega", "0.5",
                           "--T", "0.02", "--reps", "3", "--seed", "5", "--horizon-mult", "200")
        doc = json.loads(out)
        assert float(rows[0]["sim_mean_rate"]) == doc["mean_rate"]
        assert float(rows[0]["sim_stderr"]) == doc["stderr"]

    def test_k_sweep(self, capsys):
        rows = self.sweep(capsys, "--param", "k", "--from", "1", "--to", "4", "--steps", "4",
                          "--policies", "mbr", "--reps", "1", "--horizon-mult", "50")
        assert [r["policy"] for r in rows] == ["mbr1", "mbr2", "mbr3", "mbr4"]

    def test_workers_give_same_rows(self, capsys):
        args = ("--param", "N", "--from", "50", "--to", "100", "--steps", "2", "--reps", "1", "--horizon-mult", "50")
        assert self.sweep(capsys, *args) == self.sweep(capsys, *args, "--workers", "2")

    def test_unknown_param(self, capsys):
        code, _, err = run(capsys, "sweep", *FIG5_ARGS, "--param", "x", "--from", "1", "--to", "2", "--steps", "2")
        assert code == 2 and "unknown sweep parameter" in err


class TestSweepSpec:
    def test_validation(self):
        with pytest.raises(UsageError):
            SweepSpec("R", 2, 1, 5)
        with pytest.raises(UsageError):
            SweepSpec("R", 0, 1, 5, "log")
        with pytest.raises(UsageError):
            SweepSpec("R", 1, 2, 0)

    def test_log_grid(self):
        assert SweepSpec("T", 1e-3, 10, 5, "log").values() == pytest.approx([1e-3, 1e-2, 1e-1, 1, 10])
