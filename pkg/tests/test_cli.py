import csv
import io
import json
import os

import numpy as np
import pytest

from twolevel_slope.cli import fmt, main, u_grid


def run(argv, capsys):
    rc = main(argv)
    out = capsys.readouterr()
    return rc, out.out, out.err


def test_fmt():
    assert fmt(float("inf")) == "inf"
    assert fmt(float("-inf")) == "-inf"
    assert fmt(float("nan")) == "nan"
    assert fmt(0.1) == "0.10000000000000001"
    assert fmt(True) == "1"
    assert fmt(None) == ""


def test_u_grid_parsing():
    assert u_grid("0.05:0.95:19")[0] == 0.05
    assert len(u_grid("0.05:0.95:19")) == 19
    assert u_grid("0.1,0.2") == [0.1, 0.2]


def test_prox_example(capsys):
    rc, out, _ = run(["prox", "--v", "5,-4,0.5", "--theta", "4,1,0.7"], capsys)
    assert rc == 0
    assert out.strip() == "2,-2,0"


def test_prox_two_level(capsys):
    rc, out, _ = run(["prox", "--v", "4,-4,2,1", "--two-level", "4,2,0.25"], capsys)
    assert rc == 0 and out.strip() == "1,-1,0,0"


def test_dt_limit(capsys):
    rc, out, _ = run(["tradeoff", "dt-limit", "--eps", "0.5", "--delta", "0.3"], capsys)
    assert rc == 0
    assert json.loads(out)["dt_limit"] == pytest.approx(0.3669, abs=1e-3)


def test_argument_errors(capsys):
    assert run(["prox", "--bogus"], capsys)[0] == 2
    assert run(["nosuch"], capsys)[0] == 2
    assert run(["prox", "--v", "1,2"], capsys)[0] == 2
    assert run(["prox", "--v", "1,2", "--theta", "1,2"], capsys)[0] == 2
    assert run(["se", "--prior", "0:0.5,1:0.6", "--a1", "2", "--a2", "1", "--s", "0.1",
                "--delta", "0.3", "--sigma", "1"], capsys)[0] == 2


def test_infeasible_exit_code(capsys):
    rc, _, err = run(["se", "--prior", "0:0.1,5:0.9", "--a1", "0.01", "--a2", "0.01", "--s", "0.5",
                      "--delta", "0.1", "--sigma", "1"], capsys)
    assert rc == 1 and "infeasible" in err
    rc, out, _ = run(["tradeoff", "lasso", "--eps", "0.2", "--delta", "0.3", "--u-grid", "0.7,0.8"], capsys)
    assert rc == 1
    assert [r["feasible"] for r in csv.DictReader(io.StringIO(out))] == ["0", "0"]


def test_se_record(capsys):
    rc, out, _ = run(["se", "--prior", "0:0.8,5:0.2", "--a1", "2.5", "--a2", "1.2", "--s", "0.1",
                      "--delta", "0.3", "--sigma", "1"], capsys)
    assert rc == 0
    rec = json.loads(out)
    assert rec["mse"] == pytest.approx(0.3 * (rec["tau"] ** 2 - 1))
    assert rec["zero_threshold"] == 1.2
    assert rec["lam1"] > rec["lam2"]


def test_tradeoff_lasso_csv(capsys):
    rc, out, _ = run(["tradeoff", "lasso", "--eps", "0.2", "--delta", "0.3", "--u-grid", "0.1:0.5:3"], capsys)
    assert rc == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert list(rows[0]) == ["u", "min_fdp", "alpha_star", "a1", "a2", "s", "t1", "t2", "rho", "kind", "feasible"]
    assert len(rows) == 3
    fdps = [float(r["min_fdp"]) for r in rows]
    assert fdps == sorted(fdps)


@pytest.mark.slow
def test_tradeoff_all_priors_rows(capsys):
    rc, out, _ = run(["tradeoff", "all-priors", "--eps", "0.2", "--delta", "0.3",
                      "--u-grid", "0.05:0.95:19", "--grid", "coarse"], capsys)
    assert rc == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert len(rows) == 19


def test_solve_with_header(tmp_path, capsys):
    rng = np.random.default_rng(0)
    X = rng.standard_normal((20, 5))
    y = X @ np.array([1.0, 0, 0, 2, 0]) + 0.01 * rng.standard_normal(20)
    np.savetxt(tmp_path / "x.csv", X, delimiter=",", header="a,b,c,d,e", comments="")
    np.savetxt(tmp_path / "y.csv", y, delimiter=",", header="y", comments="")
    np.savetxt(tmp_path / "x2.csv", X, delimiter=",")
    rc, out, _ = run(["solve", "--x", str(tmp_path / "x.csv"), "--y", str(tmp_path / "y.csv"),
                      "--theta", "0.1"], capsys)
    assert rc == 0
    beta = [float(r["beta"]) for r in csv.DictReader(io.StringIO(out))]
    assert beta[0] == pytest.approx(1.0, abs=0.1) and beta[3] == pytest.approx(2.0, abs=0.1)
    rc2, out2, _ = run(["solve", "--x", str(tmp_path / "x2.csv"), "--y", str(tmp_path / "y.csv"),
                        "--theta", "0.1"], capsys)
    assert rc2 == 0 and out2 == out


def test_manifest_replay_byte_identical(tmp_path, capsys):
    out = tmp_path / "sim.csv"
    argv = ["simulate", "--n", "60", "--p", "50", "--replicates", "2", "--seed", "7",
            "--penalty", "two_level:1.5,0.5,0.2", "--out", str(out)]
    assert main(argv) == 0
    first = out.read_bytes()
    man = json.loads((tmp_path / "sim.csv.manifest.json").read_text())
    assert man["subcommand"] == "simulate" and man["seed"] == 7
    assert man["outputs"] == [str(out)]
    os.remove(out)
    assert main(["replay", str(tmp_path / "sim.csv.manifest.json")]) == 0
    assert out.read_bytes() == first
    capsys.readouterr()


def test_config_file(tmp_path, capsys):
    cfg = dict(design=dict(n=60, p=50), eps=0.2, prior=dict(kind="tied", value=3.0), sigma=0.5,
               penalty=dict(kind="lasso", params=[0.5]), replicates=2, seed=1)
    (tmp_path / "study.json").write_text(json.dumps(cfg))
    out = tmp_path / "o.csv"
    assert main(["simulate", "--config", str(tmp_path / "study.json"), "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert [r["replicate"] for r in rows] == ["0", "1", "mean", "sd"]
    man = json.loads((tmp_path / "o.csv.manifest.json").read_text())
    assert man["parameters"]["config_contents"] == cfg


def test_mse_tune_small(tmp_path, capsys):
    out = tmp_path / "t.csv"
    assert main(["mse-tune", "--n", "60", "--p", "50", "--replicates", "1", "--a-grid", "1,2",
                 "--s-points", "2", "--out", str(out)]) == 0
    rows = list(csv.DictReader(out.open()))
    assert float(rows[0]["mse"]) <= float(rows[0]["lasso_mse"])


def test_figures_small(tmp_path, capsys):
    rc = main(["figures", "--fig", "1", "5", "--out-dir", str(tmp_path), "--u-grid", "0.3,0.8", "--grid", "coarse"])
    assert rc == 0
    rows = list(csv.DictReader((tmp_path / "figure5.csv").open()))
    assert rows[0]["q_lasso"] != "nan" and rows[1]["q_lasso"] == "nan"
    assert float(rows[1]["q_two_level"]) < 0.8
    assert (tmp_path / "manifest.json").exists()
