import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from lossyvl.cli import main

ROOT = Path(__file__).resolve().parents[1]
INSTANCES = ROOT / "instances"


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def inst(name):
    return str(INSTANCES / name)


def test_gval_binary(capsys):
    code, out, _ = run(capsys, "gval", "--instance", inst("binary.json"))
    assert code == 0
    assert out.splitlines()[0] == "G = 0.000000 bits, i*=1, k*=2"
    assert "j*=2" in out and "beta=0.100000" in out


def test_entropy_delta_flag(capsys):
    code, out, _ = run(capsys, "entropy", "--instance", inst("dyadic.json"), "--delta", "0.25")
    assert code == 0 and out == "H^0.25 = 1.000000 bits\n"


def test_audit(capsys):
    code, out, _ = run(capsys, "audit", "--instance", inst("ternary.json"),
                       "--trials", "200", "--seed", "7")
    lines = out.splitlines()
    assert code == 0 and len(lines) == 3
    assert all(": PASS" in line for line in lines)


def test_build_and_eval_code(capsys, tmp_path):
    path = tmp_path / "code.json"
    code, _, _ = run(capsys, "build-code", "--instance", inst("binary.json"), "--stochastic",
                     "--out", str(path))
    assert code == 0
    table = json.loads(path.read_text())
    assert table["kind"] == "stochastic" and table["rate"] == 0
    code, out, _ = run(capsys, "eval-code", "--instance", inst("binary.json"),
                       "--code", str(path))
    report = json.loads(out)
    assert report["excess_prob"] == pytest.approx(0.2)
    assert report["overflow_prob"] == pytest.approx(0.1)
    assert report["is_code"]


def test_deterministic_code(capsys):
    code, out, _ = run(capsys, "build-code", "--instance", inst("binary.json"), "--deterministic")
    assert code == 0 and json.loads(out)["rate"] == 1


def _rows(text):
    lines = text.splitlines()
    assert lines[-1].startswith("# lossyvl ")
    return list(csv.reader(io.StringIO("\n".join(lines[:-1]))))


def test_sweep_csv(capsys):
    code, out, _ = run(capsys, "sweep-n", "--instance", inst("bernoulli03.json"), "--max-n", "6")
    rows = _rows(out)
    assert code == 0
    assert rows[0] == ["n", "G_bits", "lower", "upper_stochastic", "upper_deterministic",
                       "i_star", "k_star", "wall_time_ms"]
    assert [r[0] for r in rows[1:]] == [str(n) for n in range(1, 7)]
    assert "seed=0" in out.splitlines()[-1]


def test_rd_curve_csv(capsys):
    code, out, err = run(capsys, "rd-curve", "--instance", inst("bernoulli03.json"),
                         "--d-grid", "0:0.3:0.1")
    rows = _rows(out)
    assert code == 0 and rows[0] == ["D", "rate_bits", "lambda_star", "dispersion"]
    assert len(rows) == 4  # D = 0 sits at D_min and is skipped
    assert "skipping" in err
    # 17 significant digits round-trip the float exactly
    assert float(rows[1][1]) == float(f"{float(rows[1][1]):.17g}")


def test_gaussian_compare_csv(capsys):
    code, out, _ = run(capsys, "gaussian-compare", "--instance", inst("bernoulli03.json"),
                       "--max-n", "5")
    rows = _rows(out)
    assert code == 0 and rows[0][:3] == ["n", "g_rate", "gaussian_approx"]
    assert len(rows) == 6 and rows[1][4] == "nan"


def test_simulate_csv(capsys):
    code, out, _ = run(capsys, "simulate", "--instance", inst("binary.json"),
                       "--samples", "20000", "--seed", "4")
    rows = _rows(out)
    assert code == 0 and rows[0][0] == "samples" and rows[1][-1] == "4"


@pytest.mark.parametrize("argv", [
    ("simulate", "--instance", "binary.json", "--samples", "5000", "--seed", "3"),
    ("rd-curve", "--instance", "bernoulli03.json", "--d-grid", "0.05:0.25:0.05"),
    ("gaussian-compare", "--instance", "bernoulli03.json", "--max-n", "6"),
    ("audit", "--instance", "ternary.json", "--trials", "50", "--seed", "2"),
])
def test_byte_identical_outputs(capsys, argv):
    argv = [inst(a) if a.endswith(".json") else a for a in argv]
    first = run(capsys, *argv)
    second = run(capsys, *argv)
    assert first == second


def test_sweep_identical_apart_from_timing(capsys):
    argv = ["sweep-n", "--instance", inst("bernoulli03.json"), "--max-n", "7"]
    a, b = run(capsys, *argv)[1], run(capsys, *argv)[1]
    strip = lambda t: [line.rsplit(",", 1)[0] for line in t.splitlines()]  # noqa: E731
    assert strip(a) == strip(b)


def test_exact_flag(capsys):
    code, out, _ = run(capsys, "gval", "--instance", inst("bernoulli03.json"), "--exact")
    assert code == 0 and out.startswith("G = ")


def test_schema_error(capsys, tmp_path):
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"x_symbols": ["a"], "probs": [0.5]}))
    code, _, err = run(capsys, "gval", "--instance", str(bad))
    assert code == 2 and "missing" in err
    bad.write_text("{not json")
    assert run(capsys, "gval", "--instance", str(bad))[0] == 2
    assert run(capsys, "gval")[0] == 2
    assert run(capsys, "rd-curve", "--instance", inst("binary.json"), "--d-grid", "1:2")[0] == 2


def test_infeasible_exit(capsys, tmp_path):
    path = tmp_path / "inf.json"
    path.write_text(json.dumps({"x_symbols": ["a"], "probs": [1], "y_symbols": ["b"],
                                "distortion": [[5]], "D": 1, "epsilon": 0, "delta": 0}))
    code, _, err = run(capsys, "gval", "--instance", str(path))
    assert code == 3 and "epsilon = 0.000000" in err


def test_budget_exit(capsys, monkeypatch):
    monkeypatch.setenv("LOSSY_BUDGET", "16")
    code, _, err = run(capsys, "sweep-n", "--instance", inst("bernoulli03.json"), "--max-n", "6")
    assert code == 4 and "budget" in err
    code, _, _ = run(capsys, "sweep-n", "--instance", inst("bernoulli03.json"), "--max-n", "6",
                     "--budget", "64")
    assert code == 0


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "lossyvl", "gval", "--instance", inst("binary.json")],
                          capture_output=True, text=True, check=True)
    assert proc.stdout.startswith("G = 0.000000 bits")
