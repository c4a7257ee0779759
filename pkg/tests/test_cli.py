import csv
import io
import json
import subprocess
import sys

import pytest

from bdtp.cli import main
from bdtp.sweep import SweepSpec, fmt, loss_vs_optimal, render_csv


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write_config(tmp_path, name, cfg):
    path = tmp_path / name
    path.write_text(json.dumps(cfg))
    return str(path)


def test_value_exhaustive(capsys):
    code, out, _ = run(capsys, "value-exhaustive", "--family", "plus", "--n", "1", "--b", "2", "--d", "2")
    assert code == 0
    assert out == "family,n,b,d,value\nplus,1,2,2,1.1875\n"


def test_value_selective(capsys):
    code, out, _ = run(capsys, "value-selective", "--family", "plus", "--n", "1", "--b", "2",
                       "--d", "2", "--q", "1,0")
    assert code == 0
    (row,) = rows(out)
    assert row["q"] == "[1,0]" and row["value"] == "0.875"


def test_value_selective_length_mismatch(capsys):
    code, _, err = run(capsys, "value-selective", "--family", "plus", "--n", "1", "--b", "2",
                       "--d", "3", "--q", "1,0")
    assert code == 2 and "--q" in err


def test_optimize_homogeneous(capsys):
    code, out, _ = run(capsys, "optimize-homogeneous", "--family", "plus", "--n", "1",
                       "--capacity", "10", "--b-max", "20")
    assert code == 0
    (row,) = rows(out)
    assert row["b_star"] == "2" and row["d_prime"] == "3" and row["q"] == "[0.5,1,1]"


def test_optimize_heterogeneous_nonconvergence_exit(capsys):
    code, out, _ = run(capsys, "optimize-heterogeneous", "--family", "plus", "--n", "1",
                       "--capacity", "10", "--b-max", "2", "--max-iters", "2")
    assert code == 4
    assert rows(out)[0]["converged"] == "false"


def test_optimize_heterogeneous_converges(capsys):
    code, out, _ = run(capsys, "optimize-heterogeneous", "--family", "plus", "--n", "1",
                       "--capacity", "3", "--b-max", "2", "--lr", "0.01", "--max-iters", "100000")
    assert code == 0
    assert rows(out)[0]["converged"] == "true"


def test_mc_and_hard_infeasible(capsys):
    code, out, _ = run(capsys, "mc", "--p", "0.5", "--b", "2", "--d", "2", "--runs", "2000", "--seed", "1")
    assert code == 0
    (row,) = rows(out)
    assert row["allocation"] == "average" and float(row["stderr"]) > 0
    code, _, err = run(capsys, "mc", "--p", "0.5", "--b", "2", "--d", "2", "--q", "0.3,1",
                       "--runs", "10", "--hard")
    assert code == 3 and "infeasible" in err


def test_fixed_point(capsys):
    code, out, _ = run(capsys, "fixed-point", "--p", "0.9", "--b", "2")
    assert code == 0
    assert abs(float(rows(out)[0]["value"]) - 80 / 81) < 1e-10


@pytest.mark.parametrize("argv", [
    ["value-exhaustive", "--family", "plus", "--n", "0", "--b", "2", "--d", "2"],
    ["value-exhaustive", "--family", "other", "--n", "1", "--b", "2", "--d", "2"],
    ["fixed-point", "--p", "1.5", "--b", "2"],
    ["mc", "--p", "0.5", "--b", "10", "--d", "9", "--runs", "1"],
])
def test_invalid_arguments_exit_2(capsys, argv):
    with pytest.raises(SystemExit) as exc:
        code = main(argv)
        raise SystemExit(code)
    assert exc.value.code == 2


def test_json_output(capsys):
    code, out, _ = run(capsys, "value-selective", "--family", "minus", "--n", "3", "--b", "2",
                       "--d", "2", "--q", "0.5,1", "--json")
    assert code == 0
    (rec,) = json.loads(out)
    assert list(rec) == ["family", "n", "b", "d", "q", "value"]
    assert rec["q"] == [0.5, 1.0] and rec["family"] == "minus"


def test_out_file_and_threads_env(tmp_path, capsys, monkeypatch):
    cfg = write_config(tmp_path, "c.json", {"mode": "exhaustive", "families": [["plus", 1]],
                                            "b": [3, 1, 2], "d": [2, 1]})
    out1, out2 = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", cfg, "--out", str(out1)]) == 0
    monkeypatch.setenv("BDTP_THREADS", "4")
    assert main(["sweep", "--config", cfg, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    data = out1.read_bytes()
    assert b"\r" not in data
    table = rows(data.decode())
    assert [(r["b"], r["d"]) for r in table] == [("1", "1"), ("1", "2"), ("2", "1"), ("2", "2"),
                                                 ("3", "1"), ("3", "2")]
    assert all(r["error"] == "" for r in table)


def test_single_point_equals_sweep_cell(tmp_path, capsys):
    cfg = write_config(tmp_path, "c.json", {"mode": "exhaustive", "families": [["minus", 4]],
                                            "b": [5], "d": [7]})
    _, sweep_out, _ = run(capsys, "sweep", "--config", cfg)
    _, point_out, _ = run(capsys, "value-exhaustive", "--family", "minus", "--n", "4", "--b", "5", "--d", "7")
    assert rows(sweep_out)[0]["value"] == rows(point_out)[0]["value"]


def test_homogeneous_sweep_per_c_argmax(tmp_path, capsys):
    cfg = write_config(tmp_path, "c.json", {"mode": "homogeneous", "families": [["plus", 1]],
                                            "C": [10, 100, 1000], "b": list(range(1, 21))})
    code, out, _ = run(capsys, "sweep", "--config", cfg)
    assert code == 0
    table = rows(out)
    assert len(table) == 60
    assert {r["b_star"] for r in table} == {"2"}
    assert all(r["value"] == "0" for r in table if r["b"] == "1")


def test_sweep_records_point_errors(tmp_path, capsys):
    cfg = write_config(tmp_path, "c.json", {"mode": "random", "families": [["plus", 1]],
                                            "C": [10], "b": [2], "d": [1, 4]})
    code, out, _ = run(capsys, "sweep", "--config", cfg)
    assert code == 0
    bad, good = rows(out)
    assert bad["d"] == "1" and bad["error"].startswith("InfeasibleError")
    assert good["error"] == "" and float(good["value"]) > 0


def test_mc_sweep(tmp_path, capsys):
    cfg = write_config(tmp_path, "c.json", {"mode": "mc", "mc_p": [0.3], "b": [2], "C": [6],
                                            "runs": 500, "seed": 4})
    code, out, _ = run(capsys, "sweep", "--config", cfg)
    assert code == 0
    (row,) = rows(out)
    assert row["d"] == "2" and row["q"] == "[1,1]" and row["runs"] == "500"


def test_loss_map(tmp_path, capsys):
    cfg = write_config(tmp_path, "c.json", {"families": [["minus", 1], ["minus", 99]],
                                            "C": [10, 100], "b_max": 40})
    code, out, _ = run(capsys, "loss-map", "--config", cfg)
    assert code == 0
    table = rows(out)
    assert len(table) == 8  # 2 models x 2 capacities x heuristics {2, 20}
    for r in table:
        if r["heuristic_b"] == r["b_star"]:
            assert r["loss_percent"] == "0"


def test_config_errors(tmp_path, capsys):
    bad_key = write_config(tmp_path, "a.json", {"mode": "exhaustive", "families": [["plus", 1]],
                                                "b": [2], "d": [2], "colour": "red"})
    code, _, err = run(capsys, "sweep", "--config", bad_key)
    assert code == 2 and "colour" in err
    empty_axis = write_config(tmp_path, "b.json", {"mode": "exhaustive", "families": [["plus", 1]],
                                                   "b": [], "d": [2]})
    assert run(capsys, "sweep", "--config", empty_axis)[0] == 2
    wrong_mode = write_config(tmp_path, "c.json", {"mode": "loss-map", "families": [["plus", 1]],
                                                   "C": [10]})
    assert run(capsys, "sweep", "--config", wrong_mode)[0] == 2
    assert run(capsys, "sweep", "--config", str(tmp_path / "missing.json"))[0] == 2


def test_spec_from_dict_dedupes_n1():
    spec = SweepSpec.from_dict({"mode": "exhaustive", "families": [["minus", 1], ["plus", 1]],
                                "b": [2], "d": [1]})
    assert len(spec.model_axis()) == 1


def test_formatting():
    assert fmt(1 / 3) == "0.333333333333"
    assert fmt(-0.0) == "0"
    assert fmt(float("nan")) == "NA"
    assert fmt(True) == "true"
    assert fmt([0.5, 1.0]) == "[0.5,1]"
    assert render_csv(["a", "b"], [{"a": 1}]) == "a,b\n1,\n"


def test_loss_vs_optimal():
    assert loss_vs_optimal(2.0, 2.0) == 0
    assert loss_vs_optimal(2.0, 1.0) == 50
    with pytest.raises(ValueError):
        loss_vs_optimal(0.0, 1.0)


def test_console_entry_point():
    proc = subprocess.run([sys.executable, "-m", "bdtp", "fixed-point", "--p", "0.5", "--b", "2"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert proc.stdout == "p,b,value\n0.5,2,0\n"
