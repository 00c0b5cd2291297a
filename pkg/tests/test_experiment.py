"""Experiment harness: grids, record layout, CSV reproducibility, bench."""

import numpy as np
import pytest

from sketchlsq._rng import replicate_seed
from sketchlsq.errors import ConfigError
from sketchlsq.experiment import (
    CSV_HEADER,
    BenchEntry,
    ExperimentConfig,
    ExperimentRecord,
    bench,
    default_backward_schedule,
    emit_csv,
    parse_csv,
    run_experiment,
)
from sketchlsq.problems import gen_random_ls, save_problem

SMALL = ExperimentConfig(
    m=250,
    n=16,
    kappas=(10.0, 1e6),
    noises=(1e-12,),
    solvers=("sap", "saa", "qr"),
    replicates=2,
    root_seed=5,
    include_timings=False,
    backward_error_cap=300,
)


def test_csv_header_layout_frozen():
    assert CSV_HEADER == (
        "solver,seed,iteration,rel_residual,fwd_error,backward_error,"
        "kappa,noise_norm,wall_time_s"
    )


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(solvers=()),
        dict(solvers=("sap", "cholesky")),
        dict(kappas=(0.5,)),
        dict(kappas=()),
        dict(noises=()),
        dict(m=10, n=10),
        dict(replicates=0),
        dict(tol=-1.0),
        dict(workers=0),
        dict(problem="netlib"),
        dict(problem="file"),
        dict(oversample=0.5),
    ],
)
def test_config_validation_rejects(kwargs):
    with pytest.raises(ConfigError):
        ExperimentConfig(**kwargs).validate()


def test_default_backward_schedule_shape():
    dense = [k for k in range(60) if default_backward_schedule(k)]
    assert dense[:21] == list(range(21))
    assert all(k % 5 == 0 for k in dense if k > 20)


def test_run_experiment_record_grid_and_determinism(tmp_path):
    recs1 = run_experiment(SMALL)
    recs2 = run_experiment(SMALL)
    assert recs1 == recs2
    # one record per iterate per solver per (kappa, noise, replicate) cell
    seeds = {r.seed for r in recs1}
    assert len(seeds) == 4  # 2 kappas x 1 noise x 2 replicates
    assert {r.solver for r in recs1} == {"sap", "saa", "qr"}
    for r in recs1:
        assert r.wall_time_s is None
        assert np.isfinite(r.rel_residual)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_csv(recs1, p1)
    emit_csv(recs2, p2)
    assert p1.read_bytes() == p2.read_bytes()


def test_run_experiment_worker_pool_matches_serial():
    import dataclasses

    recs_serial = run_experiment(SMALL)
    recs_pool = run_experiment(dataclasses.replace(SMALL, workers=4))
    assert recs_serial == recs_pool


def test_parse_csv_round_trips_exactly(tmp_path):
    recs = run_experiment(SMALL)
    path = tmp_path / "exp.csv"
    emit_csv(recs, path)
    assert parse_csv(path) == recs


def test_parse_csv_rejects_foreign_header(tmp_path):
    path = tmp_path / "bad.csv"
    path.write_text("a,b,c\n1,2,3\n")
    with pytest.raises(ValueError):
        parse_csv(path)


def test_replicate_seeds_distinct_and_stable():
    seeds = [replicate_seed(5, i) for i in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [replicate_seed(5, i) for i in range(100)]


def test_qr_solver_records_single_iteration():
    cfg = ExperimentConfig(
        m=120, n=8, kappas=(10.0,), noises=(1e-10,), solvers=("qr",), include_timings=False
    )
    recs = run_experiment(cfg)
    assert len(recs) == 1
    assert recs[0].iteration == 0
    assert recs[0].rel_residual < 1e-9


def test_backward_error_cap_skips_expensive_column():
    cfg = ExperimentConfig(
        m=250,
        n=16,
        kappas=(10.0,),
        noises=(1e-12,),
        solvers=("saa",),
        include_timings=False,
        backward_error_cap=10,  # below m: the eta column is skipped entirely
    )
    recs = run_experiment(cfg)
    assert all(r.backward_error is None for r in recs)
    assert all(r.fwd_error is not None for r in recs)


def test_timings_column_populated_when_enabled():
    cfg = ExperimentConfig(
        m=120, n=8, kappas=(10.0,), noises=(1e-10,), solvers=("qr",), include_timings=True
    )
    recs = run_experiment(cfg)
    assert recs[0].wall_time_s is not None and recs[0].wall_time_s > 0


def test_kahan_and_vandermonde_problem_families_run():
    for family in ("kahan", "vandermonde"):
        cfg = ExperimentConfig(
            m=300,
            n=20,
            problem=family,
            solvers=("saa",),
            include_timings=False,
            forward_error=False,
            backward_error=False,
            maxit=40,
        )
        recs = run_experiment(cfg)
        assert len(recs) >= 2
        assert all(np.isfinite(r.rel_residual) for r in recs)


def test_file_problem_family_round_trips(tmp_path):
    p = gen_random_ls(150, 10, 100.0, 1e-10, 9)
    path = tmp_path / "prob.csv"
    save_problem(p, path)
    cfg = ExperimentConfig(
        problem="file",
        input_csv=str(path),
        solvers=("saa",),
        include_timings=False,
        backward_error=False,
    )
    recs = run_experiment(cfg)
    assert recs[-1].rel_residual < 1e-8


def test_return_convergence_flag():
    recs, all_conv = run_experiment(SMALL, return_convergence=True)
    assert isinstance(all_conv, bool)
    assert recs == run_experiment(SMALL)


def test_bench_returns_ordered_entries():
    entries = bench([128, 256], n=8, kappa=10.0, solvers=("saa", "qr"), repeats=1, tol=1e-8, maxit=50)
    assert [e.m for e in entries] == [128, 128, 256, 256]
    assert all(isinstance(e, BenchEntry) and e.seconds > 0 for e in entries)
    qr_entries = [e for e in entries if e.solver == "qr"]
    assert all(e.iterations == 0 and e.converged for e in qr_entries)


def test_emit_csv_exact_float_format(tmp_path):
    rec = ExperimentRecord(
        solver="saa",
        seed=1,
        iteration=0,
        rel_residual=0.1 + 0.2,  # not exactly 0.3: repr must preserve the bits
        fwd_error=None,
        backward_error=None,
        kappa=10.0,
        noise_norm=None,
        wall_time_s=None,
    )
    path = tmp_path / "one.csv"
    emit_csv([rec], path)
    text = path.read_text().splitlines()
    assert text[0] == CSV_HEADER
    assert text[1] == "saa,1,0,0.30000000000000004,,,10.0,,"
    assert parse_csv(path) == [rec]
