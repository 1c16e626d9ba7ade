import json
import subprocess
import sys
from pathlib import Path

import pytest

from dpimbalance.cli import main

ROOT = Path(__file__).resolve().parents[1]
DATA = ROOT / "data" / "mixture.csv"
BOUNDS = ROOT / "data" / "mixture.bounds.json"
CONFIGS = ROOT / "configs"


def _data_flags():
    return ["--data", str(DATA), "--bounds", str(BOUNDS)]


def _write(tmp, name, obj):
    path = tmp / name
    path.write_text(json.dumps(obj))
    return str(path)


def _run_twice(tmp_path, build):
    """Run a command in two fresh directories and return both sets of output bytes."""
    outs = []
    for tag in ("a", "b"):
        d = tmp_path / tag
        d.mkdir()
        argv, files = build(d)
        assert main(argv) == 0
        outs.append([Path(f).read_bytes() for f in files])
    return outs


def _small_run_config(tmp):
    return _write(tmp, "run.json", {
        "dataset": {"kind": "mixture", "n": 400, "seed": 3},
        "methods": [{"name": "ERM", "trainer": "erm"}, {"name": "Synth", "preprocess": "synth", "trainer": "baseline"}],
        "epsilons": [1.0],
        "seeds": 2,
    })


COMMANDS = {
    "adjust-eps": lambda d: (["adjust-eps", "--target-eps", "1", "--out", str(d / "o.csv")], [d / "o.csv"]),
    "bagging-audit": lambda d: (["bagging-audit", "--n", "1000", "--c", "2", "--out", str(d / "o.txt")], [d / "o.txt"]),
    "run": lambda d: (
        ["run", "--config", _small_run_config(d), "--out-csv", str(d / "o.csv"), "--out-json", str(d / "o.json")],
        [d / "o.csv", d / "o.json"],
    ),
    "train": lambda d: (
        ["train", *_data_flags(), "--config", str(CONFIGS / "train_erm_weighted.json"), "--seed", "4", "--out", str(d / "m.json")],
        [d / "m.json"],
    ),
    "synth": lambda d: (
        ["synth", *_data_flags(), "--config", str(CONFIGS / "synth.json"), "--seed", "1", "--out", str(d / "s.csv")],
        [d / "s.csv", d / "s.csv.receipt.json"],
    ),
    "preprocess": lambda d: (
        ["preprocess", *_data_flags(), "--method", "smote", "--seed", "2", "--out", str(d / "p.csv")],
        [d / "p.csv", d / "p.csv.receipt.json"],
    ),
    "warmup-sim": lambda d: (
        ["warmup-sim", "--config", _write(d, "w.json", {"mu0": 0, "mu1": 2, "sigma": 1, "r_star": 9, "n": 20000,
                                                         "coverage": {"n": 1000, "epsilon": 0.5, "delta": 1e-5,
                                                                      "beta": 0.1, "trials": 20, "R": 10.0}}),
         "--seed", "5", "--out", str(d / "w.json.out"), "--csv", str(d / "w.csv")],
        [d / "w.json.out", d / "w.csv"],
    ),
}


@pytest.mark.parametrize("name", sorted(COMMANDS))
def test_subcommand_is_deterministic(tmp_path, name):
    a, b = _run_twice(tmp_path, COMMANDS[name])
    assert a == b
    assert all(len(x) > 0 for x in a)


def test_boundary_is_deterministic(tmp_path):
    model = tmp_path / "m.json"
    assert main(["train", *_data_flags(), "--config", str(CONFIGS / "train_erm_weighted.json"), "--out", str(model)]) == 0

    def build(d):
        return (["boundary", "--model", str(model), "--x-range", "-5", "10", "--y-range", "-5", "10",
                 "--resolution", "15", "--out", str(d / "g.csv")], [d / "g.csv"])

    a, b = _run_twice(tmp_path, build)
    assert a == b
    assert a[0].decode().count("\n") == 15 * 15 + 1


def test_help_exits_zero():
    res = subprocess.run([sys.executable, "-m", "dpimbalance.cli", "--help"], capture_output=True, text=True)
    assert res.returncode == 0 and "adjust-eps" in res.stdout


def test_unknown_flag_is_usage_error(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["adjust-eps", "--bogus"])
    assert exc.value.code == 1


def test_bagging_audit_rejects_c_one(capsys):
    assert main(["bagging-audit", "--n", "100", "--c", "1"]) == 1


def test_bagging_audit_verdict(capsys):
    assert main(["bagging-audit", "--n", "10000", "--c", "3"]) == 0
    out = capsys.readouterr().out
    assert "verdict: ε ≤ 1e-4 holds" in out


def test_adjust_eps_table(capsys):
    assert main(["adjust-eps"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "mode,variant,input_epsilon,output_epsilon,delta,vacuous"
    assert len(lines) == 1 + 3 * 3


def test_smote_with_too_few_minority_rows(tmp_path, capsys):
    csv = tmp_path / "tiny.csv"
    csv.write_text("a,b,label\n0,0,0\n1,1,0\n2,2,0\n3,3,1\n4,4,1\n")
    code = main(["preprocess", "--data", str(csv), "--method", "smote", "--k", "5", "--out", str(tmp_path / "o.csv")])
    assert code == 2
    assert "n1 > k" in capsys.readouterr().err


def test_config_schema_rejects_unknown_keys(tmp_path, capsys):
    cfg = _write(tmp_path, "bad.json", {"epsilon": 1.0, "N": 10, "colour": "red"})
    assert main(["synth", *_data_flags(), "--config", cfg, "--out", str(tmp_path / "s.csv")]) == 1
    assert "colour" in capsys.readouterr().err


def test_train_output_fields(tmp_path):
    out = tmp_path / "m.json"
    assert main(["train", *_data_flags(), "--config", str(CONFIGS / "train_erm_weighted.json"), "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert {"config", "model", "normalization", "receipt", "convergence", "data"} <= set(doc)
    assert doc["receipt"]["epsilon"] == 1.0


def test_missing_data_file(tmp_path, capsys):
    code = main(["train", "--data", str(tmp_path / "nope.csv"), "--config", str(CONFIGS / "train_erm_weighted.json")])
    assert code == 2
