"""Experiment grids, CSV emission, and timing benchmarks.

run_experiment expands a config into (condition-number x noise x
replicate x solver) cells, runs each with per-iteration metric traces,
and flattens the traces into one record per iterate. Replicate seeds are
derived from the root seed, and cells execute in a deterministic order,
so a fixed config reproduces the same records; wall times are the one
nondeterministic column and can be suppressed for byte-identical CSVs.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from ._rng import replicate_seed
from .errors import ConfigError
from .pipelines import (
    LsqrConfig,
    SketchConfig,
    SolveReport,
    TraceConfig,
    hhqr_direct,
    master_solve,
    sketch_and_apply,
    sketch_and_precondition,
    smoothed_sketch_and_apply,
)
from .problems import LsProblem, gen_random_ls, kahan_matrix, load_problem, vandermonde_scaled

KNOWN_SOLVERS = ("sap", "saa", "smoothed", "master", "qr")

CSV_HEADER = "solver,seed,iteration,rel_residual,fwd_error,backward_error,kappa,noise_norm,wall_time_s"


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment grid: problem family, solvers, sketch, seeds, outputs."""

    m: int = 2000
    n: int = 100
    kappas: Sequence[float] = (1e10,)
    noises: Sequence[float] = (1e-14,)
    problem: str = "random"  # random | kahan | vandermonde | file
    theta: float = 1.1  # kahan angle
    input_csv: Optional[str] = None
    solvers: Sequence[str] = ("sap", "saa")
    sketch_kind: str = "srct"
    oversample: float = 8.0
    tol: float = 1e-14
    maxit: Optional[int] = None
    root_seed: int = 0
    replicates: int = 1
    forward_error: bool = True
    backward_error: bool = True
    backward_error_cap: int = 4000
    include_timings: bool = True
    workers: int = 1
    out: Optional[str] = None

    def validate(self) -> None:
        if not self.solvers:
            raise ConfigError("solvers: list must not be empty")
        unknown = [s for s in self.solvers if s not in KNOWN_SOLVERS]
        if unknown:
            raise ConfigError(f"solvers: unknown {unknown}; valid names are {KNOWN_SOLVERS}")
        if self.problem not in ("random", "kahan", "vandermonde", "file"):
            raise ConfigError(f"problem: unknown family {self.problem!r}")
        if self.problem == "file" and not self.input_csv:
            raise ConfigError("input_csv: required when problem = 'file'")
        if self.problem == "random":
            if self.m <= self.n:
                raise ConfigError(f"m: need m > n, got m={self.m}, n={self.n}")
            if not self.kappas:
                raise ConfigError("kappas: list must not be empty")
            if any(k < 1 for k in self.kappas):
                raise ConfigError(f"kappas: all must be >= 1, got {list(self.kappas)}")
            if not self.noises:
                raise ConfigError("noises: list must not be empty")
        if self.oversample * self.n <= self.n:
            raise ConfigError(f"oversample: {self.oversample} gives s <= n")
        if self.replicates < 1:
            raise ConfigError(f"replicates: must be >= 1, got {self.replicates}")
        if self.tol <= 0:
            raise ConfigError(f"tol: must be positive, got {self.tol}")
        if self.workers < 1:
            raise ConfigError(f"workers: must be >= 1, got {self.workers}")


@dataclass
class ExperimentRecord:
    """One (solver, seed, iteration) point of an experiment curve."""

    solver: str
    seed: int
    iteration: int
    rel_residual: float
    fwd_error: Optional[float] = None
    backward_error: Optional[float] = None
    kappa: Optional[float] = None
    noise_norm: Optional[float] = None
    wall_time_s: Optional[float] = None


def default_backward_schedule(k: int) -> bool:
    """Every iteration up to 20, then every 5th: keeps the per-iteration
    backward-error SVDs a bounded fraction of the run."""
    return k <= 20 or k % 5 == 0


def _run_solver(
    name: str,
    prob: LsProblem,
    cfg: ExperimentConfig,
    seed: int,
    want_trace: bool = True,
) -> SolveReport:
    sketch_cfg = SketchConfig(kind=cfg.sketch_kind, oversample=cfg.oversample)
    lsqr_cfg = LsqrConfig(tol=cfg.tol, maxit=cfg.maxit)
    trace = None
    if want_trace:
        trace = TraceConfig(
            xstar=prob.xstar if cfg.forward_error else None,
            backward_error=cfg.backward_error and prob.a.shape[0] <= cfg.backward_error_cap,
            backward_schedule=default_backward_schedule,
        )
    if name == "sap":
        return sketch_and_precondition(prob.a, prob.b, sketch_cfg, lsqr_cfg, seed, trace)
    if name == "saa":
        return sketch_and_apply(prob.a, prob.b, sketch_cfg, lsqr_cfg, seed, trace)
    if name == "smoothed":
        return smoothed_sketch_and_apply(
            prob.a, prob.b, "default", sketch_cfg, lsqr_cfg, seed, trace
        )
    if name == "master":
        return master_solve(prob.a, prob.b, sketch_cfg, lsqr_cfg, seed, trace)
    if name == "qr":
        return hhqr_direct(prob.a, prob.b, trace)
    raise ConfigError(f"solvers: unknown solver {name!r}")


def _make_problem(cfg: ExperimentConfig, kappa: float, noise: float, seed: int) -> LsProblem:
    if cfg.problem == "random":
        return gen_random_ls(cfg.m, cfg.n, kappa, noise, seed)
    if cfg.problem == "kahan":
        a = kahan_matrix(cfg.m, cfg.n, cfg.theta)
        rng = np.random.default_rng(seed)
        xstar = rng.standard_normal(cfg.n)
        return LsProblem(a=a, b=a @ xstar, xstar=xstar, e=np.zeros(cfg.m))
    if cfg.problem == "vandermonde":
        a = vandermonde_scaled(cfg.m, cfg.n)
        rng = np.random.default_rng(seed)
        xstar = rng.standard_normal(cfg.n)
        return LsProblem(a=a, b=a @ xstar, xstar=xstar, e=np.zeros(cfg.m))
    return load_problem(cfg.input_csv)


def _opt(v: float) -> Optional[float]:
    return None if v is None or np.isnan(v) else float(v)


def _records_for_cell(
    cfg: ExperimentConfig, kappa: float, noise: float, seed: int
) -> tuple[list[ExperimentRecord], bool]:
    prob = _make_problem(cfg, kappa, noise, seed)
    known_kappa = prob.kappa_by_construction
    known_noise = prob.noise_norm
    records: list[ExperimentRecord] = []
    all_converged = True
    for name in cfg.solvers:
        report = _run_solver(name, prob, cfg, seed)
        all_converged = all_converged and report.converged
        rel = report.rel_residual_trace
        fwd = report.fwd_error_trace
        bwd = report.backward_error_trace
        for k in range(len(rel)):
            records.append(
                ExperimentRecord(
                    solver=name,
                    seed=seed,
                    iteration=k,
                    rel_residual=float(rel[k]),
                    fwd_error=_opt(fwd[k]) if fwd is not None else None,
                    backward_error=_opt(bwd[k]) if bwd is not None else None,
                    kappa=known_kappa,
                    noise_norm=known_noise,
                    wall_time_s=report.wall_time if cfg.include_timings else None,
                )
            )
    return records, all_converged


def run_experiment(
    cfg: ExperimentConfig, return_convergence: bool = False
) -> Union[list[ExperimentRecord], tuple[list[ExperimentRecord], bool]]:
    """Run the full grid; deterministic record order under a fixed config.

    Cells may execute in a worker pool, but results are assembled in grid
    order regardless. With return_convergence=True also returns whether
    every solve in the grid reported convergence.
    """
    cfg.validate()
    cells = []
    idx = 0
    for kappa in cfg.kappas:
        for noise in cfg.noises:
            for _ in range(cfg.replicates):
                cells.append((kappa, noise, replicate_seed(cfg.root_seed, idx)))
                idx += 1
    if cfg.workers == 1:
        outs = [_records_for_cell(cfg, k, nz, sd) for k, nz, sd in cells]
    else:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_records_for_cell, cfg, k, nz, sd) for k, nz, sd in cells]
            outs = [f.result() for f in futures]
    records = [rec for recs, _ in outs for rec in recs]
    converged = all(ok for _, ok in outs)
    if return_convergence:
        return records, converged
    return records


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def emit_csv(records: Sequence[ExperimentRecord], path: Union[str, Path]) -> None:
    """Write records with the fixed header; shortest round-trip decimals,
    missing metrics as empty fields."""
    with open(path, "w") as fh:
        fh.write(CSV_HEADER + "\n")
        for r in records:
            fh.write(
                ",".join(
                    [
                        r.solver,
                        str(r.seed),
                        str(r.iteration),
                        _fmt(r.rel_residual),
                        _fmt(r.fwd_error),
                        _fmt(r.backward_error),
                        _fmt(r.kappa),
                        _fmt(r.noise_norm),
                        _fmt(r.wall_time_s),
                    ]
                )
                + "\n"
            )


def parse_csv(path: Union[str, Path]) -> list[ExperimentRecord]:
    """Read an emitted CSV back into records (exact round trip)."""
    records = []
    with open(path) as fh:
        header = fh.readline().rstrip("\n")
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header: {header!r}")
        for line in fh:
            parts = line.rstrip("\n").split(",")
            if len(parts) != 9:
                raise ValueError(f"malformed CSV row: {line!r}")
            records.append(
                ExperimentRecord(
                    solver=parts[0],
                    seed=int(parts[1]),
                    iteration=int(parts[2]),
                    rel_residual=float(parts[3]),
                    fwd_error=float(parts[4]) if parts[4] else None,
                    backward_error=float(parts[5]) if parts[5] else None,
                    kappa=float(parts[6]) if parts[6] else None,
                    noise_norm=float(parts[7]) if parts[7] else None,
                    wall_time_s=float(parts[8]) if parts[8] else None,
                )
            )
    return records


@dataclass
class BenchEntry:
    """Minimum-of-repeats wall time for one (m, solver) grid point."""

    m: int
    n: int
    solver: str
    seconds: float
    converged: bool
    iterations: int


def bench(
    ms: Sequence[int],
    n: int,
    kappa: float = 1e10,
    noise: float = 1e-3,
    solvers: Sequence[str] = ("sap", "saa", "qr"),
    repeats: int = 3,
    seed: int = 0,
    sketch_kind: str = "srct",
    oversample: float = 8.0,
    tol: float = 1e-10,
    maxit: Optional[int] = 100,
) -> list[BenchEntry]:
    """Time solvers over a size grid, reporting the minimum of repeats.

    No traces are attached, so the timings measure the pipelines alone.
    maxit defaults to a flat 100: timing runs cap the iteration count so
    an ill-conditioned cell measures pipeline cost, not stagnation.
    """
    entries = []
    for m in ms:
        prob = gen_random_ls(m, n, kappa, noise, seed)
        cfg = ExperimentConfig(
            m=m,
            n=n,
            solvers=tuple(solvers),
            sketch_kind=sketch_kind,
            oversample=oversample,
            tol=tol,
            maxit=maxit,
            forward_error=False,
            backward_error=False,
        )
        cfg.validate()
        for name in cfg.solvers:
            best = float("inf")
            report = None
            for _ in range(repeats):
                t0 = time.perf_counter()
                report = _run_solver(name, prob, cfg, seed, want_trace=False)
                best = min(best, time.perf_counter() - t0)
            entries.append(
                BenchEntry(
                    m=m,
                    n=n,
                    solver=name,
                    seconds=best,
                    converged=report.converged,
                    iterations=report.iterations,
                )
            )
    return entries
