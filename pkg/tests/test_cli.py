import json

import numpy as np
import pytest

from modalpca.cli import main


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    return tmp_path


def test_fit_scenario(out, capsys):
    code = main(["fit", "--scenario", "gaussian-diag", "--n", "60", "--d", "5", "--eps", "0.2", "--seed", "7"])
    assert code == 0
    text = capsys.readouterr().out
    assert "specdist=" in text
    assert json.loads((out / "model.json").read_text())["dim"] == 5


def test_fit_invalid_eps(out, capsys):
    assert main(["fit", "--scenario", "gaussian-diag", "--eps", "1.5"]) == 2
    assert "eps" in capsys.readouterr().err


def test_fit_input(out):
    X = np.random.default_rng(0).standard_normal((40, 3))
    np.savetxt(out / "data.csv", X, delimiter=",")
    assert main(["fit", "--input", "data.csv", "--components", "2", "--output", "m.json"]) == 0
    assert len(json.loads((out / "m.json").read_text())["components"]) == 2


def test_fit_needs_one_source(out):
    assert main(["fit"]) == 2
    assert main(["fit", "--input", "missing.csv"]) == 2


def test_bench_row_count_and_determinism(out, monkeypatch):
    args = ["bench", "--d", "4", "--n", "40", "--seeds", "3", "--eps-values", "0,0.2"]
    assert main(args + ["--output", "a.csv"]) == 0
    monkeypatch.setenv("MODALPCA_THREADS", "3")
    assert main(args + ["--output", "b.csv"]) == 0
    a = (out / "a.csv").read_bytes()
    assert a == (out / "b.csv").read_bytes()
    lines = a.decode().splitlines()
    assert lines[0] == "method,epsilon,seed,specdist"
    assert len(lines) == 1 + 2 * 3 * 2


def test_bench_n_sweep(out):
    assert main(["bench", "--d", "4", "--seeds", "1", "--n-values", "30,60", "--methods", "cpca"]) == 0
    lines = (out / "bench.csv").read_text().splitlines()
    assert lines[0] == "method,n,seed,specdist" and len(lines) == 3


def test_bench_empty_methods(out):
    assert main(["bench", "--methods", ""]) == 2
    assert main(["bench", "--methods", "pca"]) == 2


def test_config_file(out):
    (out / "c.json").write_text(json.dumps({"d": 4, "n": 30, "seeds": 1, "eps_values": [0.1],
                                            "methods": ["cpca"]}))
    assert main(["bench", "--config", "c.json", "--n", "40"]) == 0
    assert len((out / "bench.csv").read_text().splitlines()) == 2
    (out / "bad.json").write_text(json.dumps({"nonsense": 1}))
    assert main(["bench", "--config", "bad.json"]) == 2
    assert main(["bench", "--config", "absent.json"]) == 2


def test_influence_single_row(out):
    assert main(["influence", "--resolution", "1"]) == 0
    lines = (out / "influence.csv").read_text().splitlines()
    assert lines[0] == "u1,u2,norm" and len(lines) == 2


def test_influence_cpca_grid(out):
    assert main(["influence", "--method", "cpca", "--resolution", "3", "--n", "80"]) == 0
    assert len((out / "influence.csv").read_text().splitlines()) == 10


def test_lbbp_requires_sigma_or_target(out):
    assert main(["lbbp"]) == 2


def test_lbbp_small(out):
    assert main(["lbbp", "--sigma-z", "0.2", "--n", "100", "--seeds", "2", "--alphas", "0.1,0.4"]) == 0
    assert (out / "lbbp.csv").read_text().splitlines()[0] == "a,M_a,M_a_star,b_star,bound"
    lines = (out / "breakdown.csv").read_text().splitlines()
    assert lines[0] == "alpha,seed,cosine" and len(lines) == 5


def test_synth_and_specdist(out, capsys):
    assert main(["synth", "--d", "3", "--n", "10", "--eps", "0.2"]) == 0
    assert (out / "data.csv").read_text().splitlines()[0] == "x1,x2,x3,label"
    (out / "a.csv").write_text("0,0\n1,0\n0,1\n")
    s = 2 ** -0.5
    (out / "b.csv").write_text(f"0,{s}\n1,0\n0,{s}\n")
    capsys.readouterr()
    assert main(["specdist", "a.csv", "b.csv"]) == 0
    assert float(capsys.readouterr().out) == pytest.approx(np.pi / 4, abs=1e-12)


def test_numeric_failure_exit_code(out):
    np.savetxt(out / "same.csv", np.ones((5, 2)), delimiter=",")
    assert main(["fit", "--input", "same.csv"]) == 3


def test_unknown_command():
    assert main(["nope"]) == 2
