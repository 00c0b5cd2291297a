import json

import pytest

from sketchlsq.cli import main
from sketchlsq.experiment import parse_csv

# noise well under tol 1e-14 so the iterative solvers can actually converge
FAST = [
    "--m", "250", "--n", "16", "--kappa", "10", "--noise", "1e-15",
    "--seed", "3", "--no-timings",
]


def test_solve_prints_json_and_exits_zero(capsys):
    code = main(["solve", *FAST, "--solvers", "saa,qr"])
    out = json.loads(capsys.readouterr().out)
    assert code == 0
    assert set(out) == {"saa", "qr"}
    assert out["saa"]["converged"] is True
    assert out["saa"]["rel_residual"] < 1e-9
    assert out["qr"]["iterations"] == 0


def test_solve_nonconverged_exit_code(capsys):
    # kappa 1e10 with a fat noise floor cannot reach tol 1e-14: exit 1
    args = ["solve", "--m", "250", "--n", "16", "--kappa", "1e10", "--noise", "1e-3",
            "--seed", "3", "--solvers", "sap", "--maxit", "30"]
    assert main(args) == 1
    capsys.readouterr()
    assert main([*args, "--allow-nonconverged"]) == 0


def test_experiment_writes_parseable_csv(tmp_path, capsys):
    out = tmp_path / "exp.csv"
    code = main(["experiment", *FAST, "--solvers", "saa", "--out", str(out)])
    assert code == 0
    recs = parse_csv(out)
    assert recs[-1].rel_residual < 1e-9
    assert all(r.wall_time_s is None for r in recs)


def test_experiment_stdout_when_no_out(capsys):
    code = main(["experiment", *FAST, "--solvers", "qr"])
    lines = capsys.readouterr().out.splitlines()
    assert code == 0
    assert lines[0].startswith("solver,seed,iteration")
    assert len(lines) == 2


def test_config_file_merges_with_flag_precedence(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 250, "n": 16, "kappas": [10.0], "noises": [1e-12],
                               "solvers": ["qr"], "include_timings": False}))
    out = tmp_path / "o.csv"
    code = main(["experiment", "--config", str(cfg), "--n", "8", "--out", str(out)])
    assert code == 0
    assert len(parse_csv(out)) == 1  # qr from file, n=8 from the flag


def test_unknown_config_key_exits_two(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"m": 100, "sketch_size": 40}))
    assert main(["experiment", "--config", str(cfg)]) == 2
    assert "sketch_size" in capsys.readouterr().err


def test_bad_flag_values_exit_two(capsys):
    assert main(["solve", "--m", "10", "--n", "16"]) == 2
    capsys.readouterr()
    assert main(["experiment", "--solvers", "saa,magic"]) == 2
    assert "magic" in capsys.readouterr().err


def test_missing_input_file_exits_two(capsys):
    assert main(["experiment", "--problem", "file", "--input-csv", "/nonexistent/x.csv"]) == 2


def test_bench_prints_table(capsys):
    code = main(["bench", "--ms", "128", "--n", "8", "--kappa", "10",
                 "--solvers", "saa,qr", "--repeats", "1", "--tol", "1e-8", "--maxit", "40"])
    out = capsys.readouterr().out
    assert code == 0
    lines = [ln for ln in out.splitlines() if ln.strip()]
    assert "solver" in lines[0]
    assert len(lines) == 3


@pytest.mark.parametrize("argv", [[], ["frobnicate"]])
def test_unknown_subcommand_fails(argv, capsys):
    with pytest.raises(SystemExit):
        main(argv)
