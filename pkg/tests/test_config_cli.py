import subprocess
import sys

import numpy as np
import pytest

from radcomp.cli import run, write_csv
from radcomp.config import load, load_text
from radcomp.errors import ConfigError

BASE = """\
[params]
p = 2
a = 1
k = 1
sigma = 4
n = 3
R0 = 0
Rmax = 1
M0 = 1
"""


def _write(tmp_path, text, name="cfg.ini"):
    path = tmp_path / name
    path.write_text(text)
    return str(path)


def _read_csv(path):
    lines = open(path).read().splitlines()
    header = lines[0].split(",")
    body = [l for l in lines[1:] if not l.startswith("#")]
    footer = dict(l[2:].split("=", 1) for l in lines if l.startswith("# "))
    data = {h: [row.split(",")[i] for row in body] for i, h in enumerate(header)}
    return data, footer


def test_load_defaults_and_sections():
    sc = load_text(BASE + "[f]\nkind = power\ncoefficients = 2, 3\n[grid]\nnodes = 65\n")
    assert sc.params.p == 2 and sc.params.n == 3 and sc.M0 == 1.0 and sc.nodes == 65
    assert sc.f(0.5, 2.0) == pytest.approx(16.0)
    assert sc.b(0.3) == 0.0


@pytest.mark.parametrize("text, lineno, fragment", [
    (BASE + "colour = 3\n", 10, "unknown key"),
    (BASE + "[mesh]\n", 10, "unknown section"),
    ("p = 2\n", 1, "outside of any section"),
    (BASE + "[f]\nkind = spline\n", 11, "unknown f kind"),
    (BASE.replace("p = 2", "p = two"), 2, "real number"),
])
def test_config_errors_carry_line_numbers(text, lineno, fragment):
    with pytest.raises(ConfigError) as info:
        load_text(text)
    assert info.value.lineno == lineno
    assert str(info.value).startswith(f"line {lineno}: ")
    assert fragment in str(info.value)


def test_missing_required_key():
    with pytest.raises(ConfigError, match="missing required key 'sigma'"):
        load_text(BASE.replace("sigma = 4\n", ""))


def test_table_sources(tmp_path):
    (tmp_path / "f.csv").write_text("r,t,f\n0,1,1\n0,2,2\n1,1,3\n1,2,4\n")
    (tmp_path / "b.csv").write_text("r,b\n0,0\n1,2\n")
    path = _write(tmp_path, BASE + "[f]\nkind = table:f.csv\n[b]\nkind = table:b.csv\n")
    sc = load(path)
    assert sc.f(0.5, 2.0) == pytest.approx(3.0)
    assert sc.f(0.0, 1.0) == 1.0
    assert sc.b(0.25) == pytest.approx(0.5)
    (tmp_path / "bad.csv").write_text("x,y\n0,0\n")
    with pytest.raises(ConfigError, match="header"):
        load(_write(tmp_path, BASE + "[b]\nkind = table:bad.csv\n", "bad.ini"))


def test_write_csv_column_order_and_format(tmp_path):
    out = tmp_path / "x.csv"
    text = write_csv({"kernel": [0.1], "extra": [2.0], "r": [1 / 3], "m": [1.0]}, {"seed": 0}, out)
    lines = text.splitlines()
    assert lines[0] == "r,m,kernel,extra"
    assert lines[1].split(",")[0] == "0.33333333333333331"
    assert lines[-1] == "# seed=0"
    assert out.read_text() == text


def test_solve_zero_source(tmp_path):
    cfg = _write(tmp_path, BASE + "[f]\nkind = constant\ncoefficients = 0\n[grid]\nnodes = 33\n")
    out = tmp_path / "m.csv"
    assert run(["solve", cfg, "--out", str(out)]) == 0
    data, footer = _read_csv(out)
    assert set(data["m"]) == {"1"}
    assert footer["converged"] == "True" and footer["iterations"] == "1"
    assert footer["param.p"] == "2"


def test_solve_blowup_exit_code(tmp_path, capsys):
    text = BASE.replace("Rmax = 1", "Rmax = 2.5").replace("M0 = 1", "M0 = 3")
    cfg = _write(tmp_path, text + "[f]\nkind = power\ncoefficients = 1, 2\n[grid]\nnodes = 513\n")
    assert run(["solve", cfg, "--alpha", "4", "--beta", "0.5", "--out", str(tmp_path / "b.csv")]) == 4
    assert "blow-up" in capsys.readouterr().err


def test_solve_nonconvergence_exit_code(tmp_path):
    cfg = _write(tmp_path, BASE + "[f]\nkind = power\ncoefficients = 1, 1\n[grid]\nnodes = 33\n")
    assert run(["solve", cfg, "--alpha", "1", "--beta", "0.5", "--max-iter", "2",
                "--out", str(tmp_path / "n.csv")]) == 4


def test_p_equal_one_is_rejected(tmp_path, capsys):
    cfg = _write(tmp_path, BASE.replace("p = 2", "p = 1"))
    assert run(["solve", cfg]) == 2
    assert "p > 1" in capsys.readouterr().err


def test_unknown_key_exit_code(tmp_path, capsys):
    cfg = _write(tmp_path, BASE + "colour = 3\n")
    assert run(["solve", cfg]) == 2
    assert "line 10" in capsys.readouterr().err


def test_bad_arguments_exit_code(capsys):
    assert run(["frobnicate"]) == 2
    assert run(["solve", "/nonexistent/cfg.ini"]) == 2
    assert run(["oracle", "--gamma", "x"]) == 2


def test_oracle_quadratic_margins(tmp_path):
    out = tmp_path / "o.csv"
    assert run(["oracle", "--profile", "quadratic", "--grid-n", "257", "--out", str(out)]) == 0
    data, footer = _read_csv(out)
    assert list(data)[:5] == ["r", "M", "m", "bound", "kernel"]
    assert min(float(x) for x in data["margin_m"]) >= 0
    assert min(float(x) for x in data["margin_bound"]) >= -1e-9
    assert footer["passed"] == "True"


def test_oracle_comparison_failure_exit_code(tmp_path):
    assert run(["oracle", "--alpha", "10", "--beta", "0.5", "--grid-n", "129",
                "--out", str(tmp_path / "f.csv")]) == 3


def test_verify_report(tmp_path, capsys):
    cfg = _write(tmp_path, BASE + "[f]\nkind = constant\ncoefficients = 1\n[grid]\nnodes = 129\n")
    assert run(["verify", cfg, "--alpha", "1", "--beta", "0.5", "--levels", "3",
                "--out", str(tmp_path / "v.csv")]) == 0
    data, _ = _read_csv(tmp_path / "v.csv")
    assert data["nodes"] == ["129", "257", "513"]
    orders = [float(x) for x in data["flux_order"][1:]]
    assert all(o >= 1.8 for o in orders)
    diffs = [float(x) for x in data["sup_independent_diff"]]
    assert diffs[0] > diffs[1] > diffs[2] and diffs[2] < 1e-5


def test_bounds_and_calibrate(tmp_path):
    # on [0, 2] every kind has admissible windows at beta = 0.25
    cfg = _write(tmp_path, BASE.replace("Rmax = 1", "Rmax = 2"))
    out = tmp_path / "b.csv"
    assert run(["bounds", cfg, "--beta", "0.25", "--grid-n", "129", "--samples", "4",
                "--out", str(out)]) == 0
    data, footer = _read_csv(out)
    assert set(data["kind"]) == {"L3.1", "C3.1", "C3.2", "L3.2", "L3.3", "L3.4", "L3.5"}
    assert footer["seed"] == "0"
    cal = tmp_path / "c.csv"
    assert run(["calibrate", cfg, "--beta", "0.25", "--grid-n", "129", "--samples", "12",
                "--out", str(cal)]) == 0
    data, _ = _read_csv(cal)
    assert all(float(v) > 0 for v in data["gamma_hat"])


def test_runs_are_byte_identical(tmp_path):
    cfg = _write(tmp_path, BASE + "[f]\nkind = power\ncoefficients = 1, 1\n[b]\nkind = constant\n"
                 "coefficients = 1\n[grid]\nnodes = 65\n")
    for argv in (["solve", cfg, "--alpha", "1", "--beta", "0.5"],
                 ["oracle", "--profile", "exp", "--grid-n", "65"],
                 ["calibrate", "--beta", "0.25", "--grid-n", "65", "--samples", "8"]):
        first, second = tmp_path / "1.csv", tmp_path / "2.csv"
        assert run(argv + ["--out", str(first)]) == 0
        assert run(argv + ["--out", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()


def test_module_entry_point(tmp_path):
    cfg = _write(tmp_path, BASE + "[grid]\nnodes = 17\n")
    proc = subprocess.run([sys.executable, "-m", "radcomp", "solve", cfg], capture_output=True,
                          text=True)
    assert proc.returncode == 0
    rows = [l for l in proc.stdout.splitlines() if l and not l.startswith("#")]
    assert rows[0] == "r,m,kernel" and len(rows) == 18
    assert np.isclose(float(rows[-1].split(",")[1]), 1.0)
