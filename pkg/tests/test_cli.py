import subprocess
import sys

import pytest

from descentlab import cli


def run(*argv):
    return subprocess.run([sys.executable, "-m", "descentlab", *argv], capture_output=True, text=True)


def test_oracle_check_exit_zero():
    r = run("oracle-check", "--seed", "1")
    assert r.returncode == 0
    assert r.stdout.count("PASS") == 6 and "FAIL" not in r.stdout


def test_missing_config_exit_two():
    r = run("feature-sweep", "--config", "missing.cfg")
    assert r.returncode == 2
    assert "missing.cfg" in r.stderr and r.stdout == ""


def test_unknown_flag_prints_usage():
    r = run("feature-sweep", "--frobnicate")
    assert r.returncode == 2 and "usage:" in r.stderr


def test_conflicting_overrides(tmp_path):
    assert cli.main(["feature-sweep", "--set", "seed=1", "--set", "seed=2", "--out", str(tmp_path)]) == 2
    assert cli.main(["feature-sweep", "--set", "seed=1", "--set", "seed=1", "--set", "n_train=20",
                     "--set", "n_test=10", "--set", "capacity_grid=5,10", "--out", str(tmp_path)]) == 0


def test_experiment_must_match_command(tmp_path):
    assert cli.main(["nn-sweep", "--set", "experiment=FeatureSweep", "--out", str(tmp_path)]) == 2


def test_sweep_then_plot(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("n_train = 30\nn_test = 20\ncapacity_grid = 5, 20, 40\nlambda_grid = 1e-8, 100\n")
    before = cfg.read_text()
    out = tmp_path / "out"
    assert cli.main(["feature-sweep", "--config", str(cfg), "--seed", "3", "--out", str(out), "--jobs", "2"]) == 0
    csv_path, json_path = capsys.readouterr().out.split()
    assert csv_path.endswith(".csv") and json_path.endswith(".summary.json")
    assert cfg.read_text() == before
    assert cli.main(["plot", csv_path]) == 0
    script = capsys.readouterr().out.strip()
    assert script.endswith(".gnuplot")
    text = open(script).read()
    assert text.count("\nplot ") == 2 and "set arrow from 300," in text  # N x K = 30 x 10


def test_nn_sweep_runs(tmp_path, capsys):
    argv = ["nn-sweep", "--set", "n_train=20", "--set", "n_test=10", "--set", "capacity_grid=1,2",
            "--set", "max_epochs=2", "--set", "batch_size=4", "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    assert "NnReuseSweep-" in capsys.readouterr().out


def test_experiment_failure_exit_one(tmp_path, monkeypatch):
    from descentlab import sweep

    def broken(prob, method="auto"):
        raise ArithmeticError("no")

    monkeypatch.setattr(sweep, "anchored_ridge_solve", broken)
    argv = ["feature-sweep", "--set", "n_train=20", "--set", "n_test=10", "--set", "capacity_grid=5", "--out", str(tmp_path)]
    assert cli.main(argv) == 1


def test_plot_errors(tmp_path):
    assert cli.main(["plot", str(tmp_path / "absent.csv")]) == 2
    bad = tmp_path / "bad.csv"
    bad.write_text("a,b\n")
    assert cli.main(["plot", str(bad)]) == 2


def test_fetch_data(tmp_path, monkeypatch):
    assert cli.main(["fetch-data", "--out", str(tmp_path)]) == 2
    src = tmp_path / "mirror"
    src.mkdir()
    (src / "train-images-idx3-ubyte.gz").write_bytes(b"x" * 7)
    (src / "train-labels-idx1-ubyte.gz").write_bytes(b"y" * 3)
    dest = tmp_path / "data"
    assert cli.main(["fetch-data", "--url", src.as_uri(), "--out", str(dest)]) == 1
    assert not (dest / "train-images-idx3-ubyte.gz").exists()
    monkeypatch.setattr(cli, "MNIST_FILES", {"train-images-idx3-ubyte.gz": 7, "train-labels-idx1-ubyte.gz": 3})
    assert cli.main(["fetch-data", "--url", src.as_uri(), "--out", str(dest)]) == 0
    assert (dest / "train-labels-idx1-ubyte.gz").read_bytes() == b"yyy"


def test_version():
    with pytest.raises(SystemExit) as info:
        cli.main(["--version"])
    assert info.value.code == 0
