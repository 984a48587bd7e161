import csv
import json
import shutil
import subprocess

import pytest

from optlab.cli import main

SMALL_CONFIG = """\
num_bs_antennas = 4
num_ir_elements = 4
num_ues = 2
num_quantiles = 5
reduced_action_count = 4
"""


@pytest.fixture
def cfg(tmp_path):
    p = tmp_path / "small.cfg"
    p.write_text(SMALL_CONFIG)
    return str(p)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def _error_line(err):
    line = err.strip().splitlines()[-1]
    assert line.startswith("optlab-error: ")
    return json.loads(line[len("optlab-error: "):])


def test_estimate(tmp_path, cfg, capsys):
    out = tmp_path / "o"
    assert main(["estimate", "--config", cfg, "--out", str(out), "--drops", "200"]) == 0
    rows = _rows(out / "estimate.csv")
    assert len(rows) == 2
    assert all(abs(float(r["relative_error"])) < 0.1 for r in rows)
    assert str(out / "estimate.csv") in capsys.readouterr().out


def test_optimize_with_dump(tmp_path, cfg):
    out = tmp_path / "o"
    dump = tmp_path / "sol.txt"
    assert main(["optimize", "--config", cfg, "--out", str(out), "--dump-solution", str(dump)]) == 0
    (summary,) = _rows(out / "optimize_summary.csv")
    assert float(summary["rate"]) > 0
    trace = [float(r["objective"]) for r in _rows(out / "optimize.csv")]
    assert all(b >= a - 1e-9 * abs(b) for a, b in zip(trace, trace[1:]))
    assert dump.read_text().count("# shape") == 2


def test_sweep_and_report(tmp_path, cfg, capsys):
    out = tmp_path / "o"
    assert main(["sweep", "--config", cfg, "--out", str(out), "--scheme", "fixed_ir,direct",
                 "--var", "P_max", "--values", "20,30", "--drops", "2"]) == 0
    assert len(_rows(out / "sweep_P_max.csv")) == 8
    assert len(_rows(out / "plot_P_max.csv")) == 4
    capsys.readouterr()
    assert main(["report", "--out", str(out)]) == 0
    assert "fixed_ir" in capsys.readouterr().out


def test_learning_pipeline(tmp_path, cfg):
    out = tmp_path / "o"
    base = ["--config", cfg, "--out", str(out)]
    assert main(["reduce-actions", *base, "--drops", "3"]) == 0
    assert len(_rows(out / "actions.csv")[0]) == 2
    assert main(["train", *base, "--episodes", "3", "--drops", "2"]) == 0
    rows = _rows(out / "train.csv")
    assert len(rows) == 6 and set(rows[0]) == {"episode", "mean_rate", "epsilon", "scheme"}
    assert (out / "table_qrdrl_0.txt").exists() and (out / "table_qlearning_0.txt").exists()
    assert main(["evaluate", *base, "--drops", "2"]) == 0
    rows = _rows(out / "evaluate.csv")
    assert sorted({r["scheme"] for r in rows}) == ["no_adapt", "qlearning", "qrdrl"]
    assert len(rows) == 6


def test_usage_error_is_machine_readable(capsys):
    with pytest.raises(SystemExit) as info:
        main(["sweep", "--var", "K"])
    assert info.value.code == 2
    assert _error_line(capsys.readouterr().err)["error"] == "UsageError"


def test_runtime_error_is_machine_readable(tmp_path, capsys):
    assert main(["report", "--out", str(tmp_path / "missing")]) == 1
    assert _error_line(capsys.readouterr().err)["error"] == "FileNotFoundError"
    bad = tmp_path / "bad.cfg"
    bad.write_text("num_ir_elements = 5\n")
    assert main(["estimate", "--config", str(bad), "--out", str(tmp_path)]) == 1
    assert _error_line(capsys.readouterr().err)["error"] == "ConfigError"


@pytest.mark.skipif(shutil.which("optlab") is None, reason="console script not installed")
def test_console_script(tmp_path):
    res = subprocess.run(["optlab", "report", "--out", str(tmp_path)], capture_output=True, text=True)
    assert res.returncode == 1
    assert _error_line(res.stderr)["error"] == "FileNotFoundError"
    res = subprocess.run(["optlab", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "reduce-actions" in res.stdout
