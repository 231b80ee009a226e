import subprocess
import sys

from overdict import csvio
from overdict.cli import main

S2 = ["--d", "64", "--r", "128", "--s", "2", "--n", "4096", "--dictionary", "hadamard", "--rho", "0.55",
      "--eps-dict", "0.3", "--max-edges", "50000"]


def test_pipeline_subcommands(tmp_path, capsys):
    out = ["--out", str(tmp_path)]
    assert main(["gen", *S2, "--seed", "3", *out]) == 0
    assert main(["graph", *S2, *out]) == 0
    assert main(["cluster", *S2, "--seed", "3", *out]) == 0
    assert csvio.read_matrix(tmp_path / "Abar.csv").shape == (64, 128)
    assert main(["recover", *S2, "--eps-coeff", "0.4", *out]) == 0
    assert main(["eval", *S2, *out]) == 0
    text = capsys.readouterr().out
    assert "eps_A=" in text and "graph check skipped" in text


def test_run_exit_codes(tmp_path):
    assert main(["run", *S2, "--out", str(tmp_path / "ok")]) == 0
    assert main(["run", "--d", "64", "--r", "128", "--s", "3", "--n", "100", "--dictionary", "hadamard",
                 "--out", str(tmp_path / "bad")]) == 3
    assert main(["run", "--d", "0", "--out", str(tmp_path / "cfg")]) == 2
    assert main(["run", "--config", str(tmp_path / "missing.cfg"), "--out", str(tmp_path)]) == 1


def test_config_file_flags_win(tmp_path):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("d = 16\nr = 24\ns = 2\nn = 40\nstages =\n")
    assert main(["run", "--config", str(cfg), "--n", "30", "--out", str(tmp_path)]) == 0
    row = csvio.read_table(tmp_path / "report.csv")[0]
    assert row["n"] == "30" and row["d"] == "16" and row["stages"] == ""


def test_sweep_grid(tmp_path):
    assert main(["sweep", "--d", "16", "--r", "24", "--s", "2", "--stages", "", "--grid", "n=20,40",
                 "--grid", "seed=1,2", "--out", str(tmp_path)]) == 0
    rows = csvio.read_table(tmp_path / "report.csv")
    assert [(r["n"], r["seed"]) for r in rows] == [("20", "1"), ("20", "2"), ("40", "1"), ("40", "2")]
    assert main(["sweep", "--grid", "n", "--out", str(tmp_path)]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "overdict", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "sweep" in res.stdout
