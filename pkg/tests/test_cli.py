import json

import numpy as np
import pytest
from click.testing import CliRunner

from hop import sample_returns
from hop.cli import main
from hop.data_io import load_params, read_returns_csv, save_params
from conftest import make_params


@pytest.fixture
def runner():
    return CliRunner()


def _write_params(rng, path, n=3, **kw):
    params = make_params(n, rng, **kw)
    save_params(params, path)
    return params


class TestSample:
    def test_writes_csv_and_manifest(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json")
        out = tmp_path / "r.csv"
        res = runner.invoke(main, ["sample", str(tmp_path / "p.json"),
                                   "--count", "25", "--seed", "4",
                                   "--out", str(out)])
        assert res.exit_code == 0, res.output
        data = read_returns_csv(out)
        assert data.n_periods == 25
        manifest = json.loads((tmp_path / "r.csv.manifest.json").read_text())
        assert manifest["manifest"]["seed"] == 4 or manifest.get("seed") == 4

    def test_count_zero_header_only(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json")
        out = tmp_path / "r.csv"
        res = runner.invoke(main, ["sample", str(tmp_path / "p.json"),
                                   "--count", "0", "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 1

    def test_deterministic(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json")
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        for out in (a, b):
            res = runner.invoke(main, ["sample", str(tmp_path / "p.json"),
                                       "--count", "10", "--seed", "7",
                                       "--out", str(out)])
            assert res.exit_code == 0
        assert read_returns_csv(a).data.tolist() == read_returns_csv(b).data.tolist()


class TestFit:
    def test_round_trip(self, rng, runner, tmp_path):
        params = _write_params(rng, tmp_path / "p.json")
        res = runner.invoke(main, ["sample", str(tmp_path / "p.json"),
                                   "--count", "600", "--seed", "1",
                                   "--out", str(tmp_path / "r.csv")])
        assert res.exit_code == 0
        res = runner.invoke(main, ["fit", str(tmp_path / "r.csv"),
                                   "--out", str(tmp_path / "fit.json")])
        assert res.exit_code == 0, res.output
        fitted = load_params(tmp_path / "fit.json")
        assert fitted.n_assets == params.n_assets
        report = json.loads(
            (tmp_path / "fit_fit_report.json").read_text())
        assert "normalized_loglik" in report
        assert "manifest" in report

    def test_bad_csv_exits_2(self, runner, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1.0,oops\n")
        res = runner.invoke(main, ["fit", str(bad),
                                   "--out", str(tmp_path / "f.json")])
        assert res.exit_code == 2

    def test_empty_csv_exits_2(self, runner, tmp_path):
        empty = tmp_path / "empty.csv"
        empty.write_text("")
        res = runner.invoke(main, ["fit", str(empty),
                                   "--out", str(tmp_path / "f.json")])
        assert res.exit_code == 2

    def test_too_few_rows_exits_2(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json", n=5)
        res = runner.invoke(main, ["sample", str(tmp_path / "p.json"),
                                   "--count", "4",
                                   "--out", str(tmp_path / "r.csv")])
        assert res.exit_code == 0
        res = runner.invoke(main, ["fit", str(tmp_path / "r.csv"),
                                   "--out", str(tmp_path / "f.json")])
        assert res.exit_code == 2


class TestSolve:
    def test_xi_and_lambdas_agree(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json")
        res = runner.invoke(main, ["solve", str(tmp_path / "p.json"),
                                   "--xi", "10",
                                   "--out", str(tmp_path / "s1.json")])
        assert res.exit_code == 0, res.output
        res = runner.invoke(main, ["solve", str(tmp_path / "p.json"),
                                   "--lambdas",
                                   "1,5,18.333333333333332,55",
                                   "--out", str(tmp_path / "s2.json")])
        assert res.exit_code == 0, res.output
        w1 = json.loads((tmp_path / "s1.json").read_text())["w_final"]
        w2 = json.loads((tmp_path / "s2.json").read_text())["w_final"]
        assert np.allclose(w1, w2, atol=1e-12)
        assert abs(sum(w1) - 1.0) < 1e-9

    def test_both_xi_and_lambdas_rejected(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json")
        res = runner.invoke(main, ["solve", str(tmp_path / "p.json"),
                                   "--xi", "10", "--lambdas", "1,1,1,1",
                                   "--out", str(tmp_path / "s.json")])
        assert res.exit_code == 2

    def test_neither_rejected(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json")
        res = runner.invoke(main, ["solve", str(tmp_path / "p.json"),
                                   "--out", str(tmp_path / "s.json")])
        assert res.exit_code == 2

    def test_non_convergence_exits_3(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json", n=10)
        res = runner.invoke(main, ["solve", str(tmp_path / "p.json"),
                                   "--xi", "10", "--max-iter", "2",
                                   "--out", str(tmp_path / "s.json")])
        assert res.exit_code == 3

    def test_pgd_mode(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json")
        res = runner.invoke(main, ["solve", str(tmp_path / "p.json"),
                                   "--xi", "5", "--mode", "pgd",
                                   "--max-iter", "20000",
                                   "--out", str(tmp_path / "s.json")])
        assert res.exit_code == 0, res.output


class TestTilt:
    def test_happy_path(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json", n=4)
        spec = {"w0": [0.25, 0.25, 0.25, 0.25], "lambda": 0.5}
        (tmp_path / "t.json").write_text(json.dumps(spec))
        res = runner.invoke(main, ["tilt", str(tmp_path / "p.json"),
                                   str(tmp_path / "t.json"),
                                   "--out", str(tmp_path / "out.json")])
        assert res.exit_code == 0, res.output
        doc = json.loads((tmp_path / "out.json").read_text())
        assert "delta_achieved" in doc["tilting"]

    def test_uniform_w0(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json", n=4)
        (tmp_path / "t.json").write_text(json.dumps({"w0": "uniform"}))
        res = runner.invoke(main, ["tilt", str(tmp_path / "p.json"),
                                   str(tmp_path / "t.json"),
                                   "--out", str(tmp_path / "out.json")])
        assert res.exit_code == 0, res.output

    def test_bad_spec_exits_2(self, rng, runner, tmp_path):
        _write_params(rng, tmp_path / "p.json", n=4)
        (tmp_path / "t.json").write_text(json.dumps({"w0": [0.5, 0.5]}))
        res = runner.invoke(main, ["tilt", str(tmp_path / "p.json"),
                                   str(tmp_path / "t.json"),
                                   "--out", str(tmp_path / "out.json")])
        assert res.exit_code == 2


class TestExperimentsCommands:
    def test_error_exp_small(self, runner, tmp_path):
        out = tmp_path / "errors.csv"
        res = runner.invoke(main, ["error-exp", "--n-list", "4",
                                   "--reps", "2", "--out", str(out)])
        assert res.exit_code == 0, res.output
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 3  # header + 2 rows
        sidecar = json.loads((tmp_path / "errors.csv.manifest.json").read_text())
        assert "medians" in sidecar or "manifest" in sidecar

    def test_bench_tiny(self, runner, tmp_path):
        out = tmp_path / "bench.csv"
        res = runner.invoke(main, ["bench", "--n-list", "10,20",
                                   "--reps", "1", "--out", str(out)])
        assert res.exit_code == 0, res.output
        assert "slope" in res.output

    def test_bad_n_list_exits_2(self, runner, tmp_path):
        res = runner.invoke(main, ["bench", "--n-list", "10,frog",
                                   "--out", str(tmp_path / "b.csv")])
        assert res.exit_code == 2


class TestVersion:
    def test_version_flag(self, runner):
        res = runner.invoke(main, ["--version"])
        assert res.exit_code == 0
        assert "0.1.0" in res.output
