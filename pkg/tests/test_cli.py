import json
import subprocess
import sys

import numpy as np
import pytest
from click.testing import CliRunner

import ebgp
from ebgp.cli import cli


@pytest.fixture
def runner():
    return CliRunner()


def _gen_csv(path, n=30, generator="circle"):
    data = ebgp.gen_circle(n, radius=0.4, D=2, sigma=0.1, seed=0) \
        if generator == "circle" else ebgp.gen_swiss_roll(n, seed=0)
    data.to_csv(path)
    return data


class TestGen:
    def test_writes_csv(self, runner, tmp_path):
        out = tmp_path / "data.csv"
        res = runner.invoke(cli, ["--seed", "3", "--out", str(out), "gen",
                                  "--generator", "circle", "--n", "25",
                                  "--radius", "0.3"])
        assert res.exit_code == 0, res.output
        data = ebgp.Dataset.from_csv(out)
        assert data.n == 25 and data.ambient_dim == 3

    def test_stdout_mode(self, runner):
        res = runner.invoke(cli, ["gen", "--generator", "swiss-roll",
                                  "--n", "5"])
        assert res.exit_code == 0
        assert res.output.splitlines()[0] == "x1,x2,x3,y,fstar"


class TestFit:
    def test_predictions_csv(self, runner, tmp_path):
        train = tmp_path / "train.csv"
        _gen_csv(train)
        out = tmp_path / "pred.csv"
        res = runner.invoke(cli, ["--out", str(out), "fit",
                                  "--train", str(train),
                                  "--method", "gp-median"])
        assert res.exit_code == 0, res.output
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "split,index,prediction"
        assert len(lines) == 31

    def test_chain_dump(self, runner, tmp_path):
        train = tmp_path / "train.csv"
        _gen_csv(train)
        out = tmp_path / "pred.csv"
        dump = tmp_path / "chain.csv"
        res = runner.invoke(cli, ["--out", str(out), "fit",
                                  "--train", str(train), "--method", "eb-gp",
                                  "--n-iter", "80", "--burn-in", "20",
                                  "--chain-dump", str(dump)])
        assert res.exit_code == 0, res.output
        assert dump.read_text().splitlines()[0] == \
            "iter,t,log_posterior,accepted"

    def test_test_set_predictions(self, runner, tmp_path):
        train, test = tmp_path / "train.csv", tmp_path / "test.csv"
        _gen_csv(train)
        _gen_csv(test, n=8)
        out = tmp_path / "pred.csv"
        res = runner.invoke(cli, ["--out", str(out), "fit",
                                  "--train", str(train), "--test", str(test),
                                  "--method", "gp-mle"])
        assert res.exit_code == 0, res.output
        rows = out.read_text().strip().splitlines()[1:]
        assert sum(r.startswith("test,") for r in rows) == 8


class TestBenchmarkAndRates:
    def test_end_to_end(self, runner, tmp_path):
        out = tmp_path / "report"
        res = runner.invoke(cli, ["--seed", "1", "--out", str(out),
                                  "benchmark", "--generator", "circle",
                                  "--methods", "gp-median,single-point",
                                  "--ns", "20,30,40", "--repeats", "2",
                                  "--n-test", "25", "--no-timing"])
        assert res.exit_code == 0, res.output
        doc = json.loads((tmp_path / "report.json").read_text())
        assert doc["schema"] == 1
        assert (tmp_path / "report.csv").exists()
        res2 = runner.invoke(cli, ["rates", "--report",
                                   str(tmp_path / "report.json"),
                                   "--method", "gp-median"])
        assert res2.exit_code == 0, res2.output
        assert "slope" in res2.output


class TestPriorScan:
    def test_table_and_diagnostic(self, runner, tmp_path):
        out = tmp_path / "scan.csv"
        res = runner.invoke(cli, ["--seed", "0", "--out", str(out),
                                  "prior-scan", "--generator", "circle",
                                  "--n", "120", "--grid-size", "10",
                                  "--rho", "1.0"])
        assert res.exit_code == 0, res.output
        lines = out.read_text().strip().splitlines()
        assert lines[0] == "t,eb_log_prior,gamma_log_prior"
        assert len(lines) == 11
        assert "envelope check" in res.output


class TestOracle:
    def test_geps_order(self, runner):
        res = runner.invoke(cli, ["oracle", "--check", "geps-order"])
        assert res.exit_code == 0, res.output
        assert "slope" in res.output

    def test_knn_band(self, runner):
        res = runner.invoke(cli, ["oracle", "--check", "knn-band",
                                  "--n", "200"])
        assert res.exit_code == 0, res.output
        assert "pass fraction" in res.output


class TestExitCodes:
    def test_invalid_parameter_exits_2(self):
        out = subprocess.run(
            [sys.executable, "-m", "ebgp.cli", "gen", "--generator", "circle",
             "--n", "10", "--radius", "0.9"],
            capture_output=True, text=True)
        assert out.returncode == 2
        assert "invalid input" in out.stderr

    def test_usage_error_exits_2(self):
        out = subprocess.run(
            [sys.executable, "-m", "ebgp.cli", "fit", "--train",
             "/nonexistent.csv"],
            capture_output=True, text=True)
        assert out.returncode == 2

    def test_success_exits_0(self):
        out = subprocess.run(
            [sys.executable, "-m", "ebgp.cli", "gen", "--n", "3"],
            capture_output=True, text=True)
        assert out.returncode == 0


class TestConfigFile:
    def test_flags_override_file(self, runner, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"seed": 9, "gen": {"generator": "circle",
                                                      "n": 6}}))
        res = runner.invoke(cli, ["--config", str(cfg), "gen", "--n", "4"])
        assert res.exit_code == 0
        assert len(res.output.strip().splitlines()) == 5  # header + 4 rows
