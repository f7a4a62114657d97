import json
import subprocess
import sys

import pytest

from lglab.cli import build_parser, canonical_json, dispatch


def run(args, capsys):
    code = dispatch(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_calibrate_symmetry(capsys):
    code, out, err = run(["calibrate", "--family", "logistic", "--p", "0.5", "--d", "16", "--r", "2", "--json"],
                         capsys)
    assert code == 0
    res = json.loads(out)
    assert abs(res["mu"]) <= 1e-8 and set(res) == {"mu", "residual", "lambda"}
    assert "effective config" in err


def test_text_output_aligned(capsys):
    code, out, _ = run(["calibrate", "--p", "0.3", "--d", "2", "--r", "1"], capsys)
    assert code == 0
    keys = [line.split()[0] for line in out.splitlines()]
    assert keys == ["lambda", "mu", "residual"]


def test_missing_file_exit_1(capsys):
    code, _, err = run(["tau", "--in", "missing.bin", "--p", "0.5"], capsys)
    assert code == 1 and "not found" in err


def test_usage_errors_exit_1(capsys):
    assert run(["nope"], capsys)[0] == 1
    assert run(["calibrate", "--p", "0.5"], capsys)[0] == 1
    assert run(["calibrate", "--p", "x", "--d", "1", "--r", "1"], capsys)[0] == 1
    assert run(["calibrate", "--p", "1.5", "--d", "1", "--r", "1"], capsys)[0] == 1
    assert run(["sample", "--n", "5", "--p", "0.5", "--d", "2", "--r", "1"], capsys)[0] == 1
    assert run(["bounds", "--n", "5", "--p", "0.5", "--d", "2", "--r", "0.5"], capsys)[0] == 1
    assert run(["tails", "--lemma", "sphere", "--d", "4", "--t", "0.5", "--reps", "10000"], capsys)[0] == 1
    assert run([], capsys)[0] == 1


def test_numerical_failure_exit_2(capsys):
    code, _, err = run(["calibrate", "--p", "0.3", "--d", "1", "--r", "0.5", "--tol", "1e-15"], capsys)
    assert code == 2 and "numerical" in err


def test_resource_cap_exit_3(capsys, tmp_path):
    code, _, err = run(["sample", "--n", "100000", "--p", "0.5", "--d", "100000", "--r", "1",
                        "--out", str(tmp_path / "x.bin")], capsys)
    assert code == 3 and "cap" in err


def test_sample_then_tau(capsys, tmp_path):
    path = str(tmp_path / "g.bin")
    code, out, _ = run(["sample", "--n", "30", "--p", "0.5", "--d", "3", "--r", "1", "--seed", "42",
                        "--out", path, "--json"], capsys)
    assert code == 0 and json.loads(out)["n"] == 30
    code, out, _ = run(["tau", "--in", path, "--p", "0.5", "--algo", "both", "--json"], capsys)
    res = json.loads(out)
    assert code == 0 and res["discrepancy"] <= 1e-9
    assert {"tau", "triangle_count", "cherry_count"} <= set(res)
    code, out, _ = run(["sample", "--n", "30", "--p", "0.5", "--d", "3", "--r", "1", "--seed", "42",
                        "--edgelist"], capsys)
    assert code == 0 and all(len(line.split()) == 2 for line in out.splitlines())


def test_seed_determinism(capsys, tmp_path):
    outs = []
    for name in ("a.bin", "b.bin"):
        run(["sample", "--n", "20", "--p", "0.4", "--d", "2", "--r", "1", "--seed", "7",
             "--mechanism", "threshold", "--out", str(tmp_path / name)], capsys)
        outs.append((tmp_path / name).read_bytes())
    assert outs[0] == outs[1]


def test_json_round_trip(capsys):
    code, out, _ = run(["bounds", "--n", "100", "--p", "0.5", "--d", "3", "--r", "1", "--json"], capsys)
    assert code == 0
    assert canonical_json(json.loads(out)) + "\n" == out
    assert canonical_json({"b": float("nan"), "a": [1.0, 0.1, True]}) == '{"a": [1, 0.10000000000000001, true], "b": null}'


def test_tails_csv(capsys):
    code, out, _ = run(["tails", "--lemma", "sphere", "--d", "16", "--t", "1,2,3", "--reps", "20000",
                        "--seed", "7"], capsys)
    lines = out.splitlines()
    assert code == 0 and lines[0] == "t,empirical,se,bound,violation" and len(lines) == 4
    assert all(line.endswith("false") for line in lines[1:])


def test_power_subcommand(capsys):
    code, out, _ = run(["power", "--n", "16", "--p", "0.5", "--d", "2", "--r", "1", "--reps-null", "100",
                        "--reps-alt", "100", "--json", "--threads", "2"], capsys)
    assert code == 0 and 0 <= json.loads(out)["power"] <= 1


def test_every_flag_documents_default():
    parser = build_parser()
    sub = next(a for a in parser._actions if a.dest == "command")
    for name, p in sub.choices.items():
        text = p.format_help()
        assert "--seed" in text and "--threads" in text, name
        for action in p._actions:
            if action.option_strings and action.dest != "help":
                assert "default" in (p._get_formatter()._expand_help(action) if action.help else ""), \
                    (name, action.dest)


def test_sweep_precedence_and_determinism(capsys, tmp_path):
    cfg = {"n": 12, "p": 0.5, "spec": "logistic", "d_list": [2, 4], "r_list": [1.0, 2.0],
           "reps_null": 100, "reps_alt": 100, "level": 0.05, "master_seed": 1, "mechanism": "uniform"}
    path = tmp_path / "sweep.json"
    path.write_text(json.dumps(cfg))
    outs = []
    for i, threads in enumerate(("1", "3", "1")):
        out_path = tmp_path / f"s{i}.csv"
        code, _, err = run(["sweep", "--config", str(path), "--out", str(out_path), "--threads", threads,
                            "--gnuplot", str(tmp_path / "m.gp")], capsys)
        assert code == 0
        outs.append(out_path.read_bytes())
    assert outs[0] == outs[1] == outs[2]
    assert (tmp_path / "m.gp").exists()
    code, _, err = run(["sweep", "--config", str(path), "--out", str(tmp_path / "o.csv"), "--r-list", "3",
                        "--seed", "4"], capsys)
    echoed = json.loads(err.split("effective config ", 1)[1].splitlines()[0])
    assert echoed["r_list"] == [3] and echoed["master_seed"] == 4 and echoed["d_list"] == [2, 4]
    assert len((tmp_path / "o.csv").read_text().splitlines()) == 3
    code, _, _ = run(["sweep", "--d-list", "2", "--reps-null", "100", "--reps-alt", "100"], capsys)
    assert code == 1


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "lglab", "calibrate", "--p", "0.5", "--d", "2", "--r", "1",
                          "--json"], capture_output=True, text=True)
    assert res.returncode == 0 and abs(json.loads(res.stdout)["mu"]) < 1e-8
