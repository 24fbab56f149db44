import json
import math
import subprocess
import sys

import pytest

from coarse_teich.cli import config_hash, main


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_kerckhoff_example(capsys):
    code, out, _ = run(capsys, "kerckhoff", "--tau1", "0,1", "--tau2", "0,2")
    assert code == 0
    assert float(out) == pytest.approx(0.5 * math.log(2), abs=1e-6)


def test_tree_delta_example(capsys):
    code, out, _ = run(capsys, "delta", "--model", "tree", "--depth", "6")
    assert code == 0 and float(out) == 0.0


def test_homothety_example(capsys):
    code, out, _ = run(capsys, "homothety-nogo", "--K", "2", "--nmax", "10000")
    assert code == 0 and float(out) >= 1e3


def test_violation_exit_code(capsys):
    code, _, err = run(capsys, "check-ac", "--model", "tree", "--depth", "8", "--map", "collapse:0")
    assert code == 1
    assert "property violated" in err


def test_input_error_exit_code(capsys):
    code, _, err = run(capsys, "kerckhoff", "--tau1", "0,-1")
    assert code == 2 and err.startswith("error:")
    code, _, err = run(capsys, "delta", "--model", "halfplane")
    assert code == 2 and err.startswith("error:")
    code, _, err = run(capsys, "mcg", "--matrix", "2,0,0,1")
    assert code == 2


def test_unknown_config_field_is_line_anchored(capsys, tmp_path):
    cfg = tmp_path / "c1.json"
    cfg.write_text('{\n  "tau1": [0, 1],\n  "tau2": [0, 2],\n  "max_denominator": 100,\n  "bogus": 3\n}\n')
    code, _, err = run(capsys, "kerckhoff", "--config", str(cfg))
    assert code == 2
    assert "c1.json:5" in err and "bogus" in err


def test_malformed_config_reports_line(capsys, tmp_path):
    cfg = tmp_path / "bad.json"
    cfg.write_text('{\n  "tau1": [0, 1],\n  "tau2": \n}\n')
    code, _, err = run(capsys, "kerckhoff", "--config", str(cfg))
    assert code == 2 and "bad.json:" in err


def test_config_values_and_flag_precedence(capsys, tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"tau1": [0, 1], "tau2": [0, 4], "max_denominator": 100}))
    _, out, _ = run(capsys, "kerckhoff", "--config", str(cfg))
    assert float(out) == pytest.approx(math.log(2), abs=1e-6)
    _, out, _ = run(capsys, "kerckhoff", "--config", str(cfg), "--tau2", "0,2")
    assert float(out) == pytest.approx(0.5 * math.log(2), abs=1e-6)


def test_csv_format(capsys):
    code, out, _ = run(capsys, "homothety-nogo", "--nmax", "3", "--format", "csv")
    assert code == 0
    lines = out.split("\n")
    assert lines[0] == "n,s_a,s_b,i_x0,value"
    assert "\r" not in out and len([l for l in lines if l]) == 5


def test_fills_csv_columns(capsys):
    _, out, _ = run(capsys, "fills-bound", "--trials", "5", "--format", "csv")
    assert out.split("\n")[0].split(",")[:5] == ["tau_re", "tau_im", "ext_gamma", "bound", "ratio"]


def test_json_summary_has_config_hash(capsys):
    code, out, _ = run(capsys, "tower", "--system", "cx2", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and doc["command"] == "tower"
    assert doc["config_hash"] == config_hash("tower", {**doc["config"], "format": "json", "out": None})
    assert len(doc["config_hash"]) == 16


def test_outputs_deterministic(capsys, tmp_path):
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        run(capsys, "minsky", "--samples", "500", "--seed", "7", "--format", "csv", "--out", str(p))
    assert a.read_bytes() == b.read_bytes()
    run(capsys, "minsky", "--samples", "500", "--seed", "8", "--format", "csv", "--out", str(b))
    assert a.read_bytes() != b.read_bytes()


@pytest.mark.parametrize("argv,expect", [
    (["nullset", "--G", "E:d", "--H", "A:Y"], "G⊋H"),
    (["vis-experiment"], "non-transitive"),
    (["minsky", "--tau", "0,1", "--s1", "1,0", "--s2", "0,1"], "1"),
    (["mcg", "--matrix", "0,-1,1,0", "--tau", "0,2"], None),
    (["i-x0", "--s1", "1,0", "--s2", "0,1"], "1"),
    (["ray", "--slope", "2,3"], None),
    (["gm-limit", "--slope", "1,2"], None),
    (["subadd"], None),
    (["cone-ext"], None),
    (["gromov", "--model", "tree", "--depth", "4", "--x1", "0010", "--x2", "0011"], "3"),
    (["profile", "--model", "halfplane", "--xi1", "0", "--xi2", "0"], None),
    (["boundary-ext", "--map", "mobius:1,1,0,1", "--point", "0.5"], "1.5"),
    (["classify", "--map", "mobius:1,1,0,1"], None),
    (["semigroup", "--maps", "mobius:1,1,0,1;mobius:2,0,0,0.5"], None),
])
def test_subcommands_pass(capsys, argv, expect):
    code, out, err = run(capsys, *argv)
    assert code == 0, err
    if expect is not None:
        assert out.strip() == expect


def test_torus_vis_rejected(capsys):
    code, _, err = run(capsys, "vis-experiment", "--system", "torus")
    assert code == 2 and "error:" in err


def test_suite_regression(capsys):
    code, out, err = run(capsys, "suite", "regression", "--format", "json")
    assert code == 0, err
    doc = json.loads(out)
    assert doc["passed"] is True


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "coarse_teich", "kerckhoff"],
                       capture_output=True, text=True, check=False)
    assert r.returncode == 0
    assert float(r.stdout) == pytest.approx(0.5 * math.log(2), abs=1e-6)
