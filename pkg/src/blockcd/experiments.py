"""Experiment protocol: budgeted solver comparisons and block-size sweeps.

The comparison protocol runs the full-gradient solver first under its
stopping rule, then gives every randomized solver an iteration budget of
(full-gradient iterations actually used) x (number of blocks), capped, so
all solvers spend the same number of coordinate gradient evaluations. All
solvers start from the zero vector. Every (solver, replicate) run writes
one trace CSV; per-replicate end-state metrics go to ``metrics.csv`` and
their per-solver mean/std aggregates to ``summary.csv``.
"""

from __future__ import annotations

import configparser
import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .blocks import make_uniform_partition, write_trace
from .datasets import (LabeledDataset, ToySpec, classification_rate,
                       generate_toy, load_libsvm, standardize,
                       train_test_split)
from .losses import LogisticLoss
from .penalties import L1Penalty, LogSumPenalty
from .problem import DesignProblem
from .sampling import CyclicSelector, ImportanceSelector, UniformSelector
from .solver import (SolverConfig, compute_exact_violation, gist_solve,
                     rbcd_solve)

SAMPLERS = ("uniform", "cyclic", "importance")

METRICS_HEADER = ("solver", "replicate", "iterations", "termination",
                  "class_rate", "flops", "violation", "objective")

SUMMARY_HEADER = ("solver", "class_rate_mean", "class_rate_std", "flops_mean",
                  "flops_std", "violation_mean", "violation_std",
                  "objective_mean", "objective_std")


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 1)."""


@dataclass
class SolverSpec:
    """One solver entry of an experiment: the full-gradient method or a
    randomized block method with a sampler, block count and mixing weight."""

    name: str
    kind: str = "rbcd"
    sampler: str = "uniform"
    blocks: int = 100
    epsilon: float = 0.2

    def __post_init__(self):
        if self.kind not in ("gist", "rbcd"):
            raise ConfigError(f"solver {self.name}: unknown kind {self.kind!r}")
        if self.kind == "rbcd":
            if self.sampler not in SAMPLERS:
                raise ConfigError(
                    f"solver {self.name}: sampler must be one of {SAMPLERS}"
                )
            if self.blocks <= 0:
                raise ConfigError(f"solver {self.name}: blocks must be positive")
            if not 0 < self.epsilon <= 1:
                raise ConfigError(
                    f"solver {self.name}: epsilon must be in (0, 1]"
                )


@dataclass
class ExperimentConfig:
    """Parsed experiment manifest; see ``configs/`` for examples."""

    problem_kind: str = "toy"
    toy: ToySpec = field(default_factory=ToySpec)
    data_path: str | None = None
    train_fraction: float = 0.8
    standardize: str = "auto"
    penalty_kind: str = "log-sum"
    lam: float = 1.0
    rho: float = 0.1
    solvers: list[SolverSpec] = field(default_factory=list)
    replicates: int = 1
    seed: int = 0
    out_dir: str = "results"
    gist_max_iterations: int = 1000
    violation_tolerance: float = 1e-3
    rbcd_iteration_cap: int = 20_000

    def __post_init__(self):
        if self.problem_kind not in ("toy", "file"):
            raise ConfigError(f"unknown problem kind {self.problem_kind!r}")
        if self.problem_kind == "file" and not self.data_path:
            raise ConfigError("file problems need a path")
        if self.penalty_kind not in ("log-sum", "l1"):
            raise ConfigError(f"unknown penalty {self.penalty_kind!r}")
        if self.lam <= 0:
            raise ConfigError("lambda must be positive")
        if self.penalty_kind == "log-sum" and self.rho <= 0:
            raise ConfigError("rho must be positive")
        if not self.solvers:
            raise ConfigError("at least one solver is required")
        if self.replicates < 1:
            raise ConfigError("replicates must be at least 1")
        if self.standardize not in ("auto", "yes", "no"):
            raise ConfigError("standardize must be auto, yes or no")
        names = [s.name for s in self.solvers]
        if len(set(names)) != len(names):
            raise ConfigError("solver names must be unique")

    def make_penalty(self):
        if self.penalty_kind == "l1":
            return L1Penalty()
        return LogSumPenalty(self.rho)

    @property
    def wants_standardize(self) -> bool:
        if self.standardize == "auto":
            return self.problem_kind == "toy"
        return self.standardize == "yes"


def _get(section, key, cast, default):
    if section is None or key not in section:
        return default
    raw = section[key]
    try:
        if cast is bool:
            return raw.strip().lower() in ("1", "true", "yes", "on")
        return cast(raw)
    except ValueError as exc:
        raise ConfigError(f"bad value {raw!r} for key {key!r}") from exc


def load_config(path) -> ExperimentConfig:
    """Parse an INI experiment manifest."""
    parser = configparser.ConfigParser(interpolation=None)
    read = parser.read(path)
    if not read:
        raise OSError(f"cannot read config file {path}")

    prob = parser["problem"] if parser.has_section("problem") else None
    pen = parser["penalty"] if parser.has_section("penalty") else None
    run = parser["run"] if parser.has_section("run") else None
    stop = parser["stopping"] if parser.has_section("stopping") else None

    solvers = []
    for section in parser.sections():
        if not section.startswith("solver."):
            continue
        s = parser[section]
        solvers.append(SolverSpec(
            name=section.split(".", 1)[1],
            kind=_get(s, "kind", str, "rbcd"),
            sampler=_get(s, "sampler", str, "uniform"),
            blocks=_get(s, "blocks", int, 100),
            epsilon=_get(s, "epsilon", float, 0.2),
        ))

    toy = ToySpec(
        n_train=_get(prob, "n_train", int, 200),
        n_test=_get(prob, "n_test", int, 1000),
        dim=_get(prob, "dim", int, 2000),
        n_relevant=_get(prob, "n_relevant", int, 20),
        seed=0,
    )
    return ExperimentConfig(
        problem_kind=_get(prob, "kind", str, "toy"),
        toy=toy,
        data_path=_get(prob, "path", str, None),
        train_fraction=_get(prob, "train_fraction", float, 0.8),
        standardize=_get(prob, "standardize", str, "auto"),
        penalty_kind=_get(pen, "kind", str, "log-sum"),
        lam=_get(pen, "lambda", float, 1.0),
        rho=_get(pen, "rho", float, 0.1),
        solvers=solvers,
        replicates=_get(run, "replicates", int, 1),
        seed=_get(run, "seed", int, 0),
        out_dir=_get(run, "out", str, "results"),
        gist_max_iterations=_get(stop, "gist_max_iterations", int, 1000),
        violation_tolerance=_get(stop, "violation_tolerance", float, 1e-3),
        rbcd_iteration_cap=_get(stop, "rbcd_iteration_cap", int, 20_000),
    )


def derive_seed(*parts) -> int:
    """Deterministic 64-bit seed from a tuple of non-negative integers."""
    state = np.random.SeedSequence([int(p) for p in parts]).generate_state(
        1, np.uint64)
    return int(state[0])


def _replicate_data(config: ExperimentConfig, rep: int,
                    full_data: LabeledDataset | None):
    if config.problem_kind == "toy":
        spec = ToySpec(config.toy.n_train, config.toy.n_test, config.toy.dim,
                       config.toy.n_relevant, seed=derive_seed(config.seed,
                                                               rep, 0))
        train, test = generate_toy(spec)
    else:
        train, test = train_test_split(full_data, config.train_fraction,
                                       seed=derive_seed(config.seed, rep, 0))
    if config.wants_standardize:
        train, test = standardize(train, test)
    return train, test


def _make_selector(spec: SolverSpec):
    if spec.sampler == "uniform":
        return UniformSelector(spec.blocks)
    if spec.sampler == "cyclic":
        return CyclicSelector(spec.blocks)
    return ImportanceSelector(spec.blocks, spec.epsilon)


def _budget_config(max_iterations, seed, m):
    return SolverConfig(
        max_iterations=max_iterations,
        violation_tolerance=0.0,
        check_violation_every=m,
        trace_every=m,
        seed=seed,
    )


@dataclass
class SummaryRow:
    solver: str
    class_rate_mean: float
    class_rate_std: float
    flops_mean: float
    flops_std: float
    violation_mean: float
    violation_std: float
    objective_mean: float
    objective_std: float


def _aggregate(metric_rows, solver_order) -> list[SummaryRow]:
    rows = []
    for name in solver_order:
        sub = [r for r in metric_rows if r["solver"] == name]
        if not sub:
            continue

        def ms(key):
            vals = np.asarray([float(r[key]) for r in sub])
            return float(np.mean(vals)), float(np.std(vals))

        cr = ms("class_rate")
        fl = ms("flops")
        vi = ms("violation")
        ob = ms("objective")
        rows.append(SummaryRow(name, cr[0], cr[1], fl[0], fl[1], vi[0], vi[1],
                               ob[0], ob[1]))
    return rows


def write_metrics(path, metric_rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for r in metric_rows:
            writer.writerow([r["solver"], r["replicate"], r["iterations"],
                             r["termination"], repr(float(r["class_rate"])),
                             int(r["flops"]), repr(float(r["violation"])),
                             repr(float(r["objective"]))])


def read_metrics(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != METRICS_HEADER:
            raise ValueError(f"{path}: unexpected metrics header")
        for row in reader:
            rows.append(row)
    return rows


def write_summary(path, rows: list[SummaryRow]) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SUMMARY_HEADER)
        for r in rows:
            writer.writerow([
                r.solver,
                repr(r.class_rate_mean), repr(r.class_rate_std),
                repr(r.flops_mean), repr(r.flops_std),
                repr(r.violation_mean), repr(r.violation_std),
                repr(r.objective_mean), repr(r.objective_std),
            ])


def format_summary_table(rows: list[SummaryRow]) -> str:
    """Aligned text table of the per-solver aggregates."""
    header = ("solver", "class rate", "flops", "violation", "objective")
    lines = [f"{header[0]:<14} {header[1]:>17} {header[2]:>24} "
             f"{header[3]:>21} {header[4]:>23}"]
    for r in rows:
        lines.append(
            f"{r.solver:<14} "
            f"{r.class_rate_mean:8.4f} ± {r.class_rate_std:6.4f} "
            f"{r.flops_mean:13.4g} ± {r.flops_std:8.3g} "
            f"{r.violation_mean:10.4g} ± {r.violation_std:8.3g} "
            f"{r.objective_mean:12.6g} ± {r.objective_std:8.3g}"
        )
    return "\n".join(lines)


def trace_filename(solver_name: str, rep: int, size: int | None = None) -> str:
    if size is None:
        return f"trace_{solver_name}_rep{rep:03d}.csv"
    return f"trace_{solver_name}_size{size}_rep{rep:03d}.csv"


def run_experiment(config: ExperimentConfig, echo=print):
    """Run the budgeted comparison and write traces, metrics and summary."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    penalty = config.make_penalty()
    loss = LogisticLoss()

    full_data = None
    if config.problem_kind == "file":
        full_data = load_libsvm(config.data_path)

    needs_budget = any(s.kind == "rbcd" for s in config.solvers)
    metric_rows = []

    for rep in range(config.replicates):
        train, test = _replicate_data(config, rep, full_data)
        problem = DesignProblem(train.features, train.labels, loss, penalty,
                                config.lam)
        d = problem.dim

        gist_result = None
        if needs_budget or any(s.kind == "gist" for s in config.solvers):
            gist_cfg = SolverConfig(
                max_iterations=config.gist_max_iterations,
                violation_tolerance=config.violation_tolerance,
                seed=derive_seed(config.seed, rep, 1),
            )
            gist_result = gist_solve(problem, gist_cfg)

        for idx, spec in enumerate(config.solvers):
            if spec.kind == "gist":
                result = gist_result
                partition = make_uniform_partition(d, 1)
            else:
                partition = make_uniform_partition(d, spec.blocks)
                budget = max(1, min(gist_result.iterations * spec.blocks,
                                    config.rbcd_iteration_cap))
                cfg = _budget_config(budget,
                                     derive_seed(config.seed, rep, 2 + idx),
                                     spec.blocks)
                result = rbcd_solve(problem, partition, _make_selector(spec),
                                    cfg)
            write_trace(out / trace_filename(spec.name, rep), result.trace)
            _, viol = compute_exact_violation(problem, partition, result.x)
            metric_rows.append({
                "solver": spec.name,
                "replicate": rep,
                "iterations": result.iterations,
                "termination": result.termination,
                "class_rate": classification_rate(test, result.x),
                "flops": result.flops.total,
                "violation": viol,
                "objective": result.trace[-1].objective,
            })

    write_metrics(out / "metrics.csv", metric_rows)
    summary = _aggregate(metric_rows, [s.name for s in config.solvers])
    write_summary(out / "summary.csv", summary)
    if echo is not None:
        echo(format_summary_table(summary))
    return summary


def block_size_sweep(config: ExperimentConfig, sizes, echo=print):
    """Run the importance-sampled solver at several block sizes.

    Each size gets the equalized gradient-evaluation budget (full-gradient
    iterations x number of blocks, capped). Per-replicate traces plus one
    row-wise averaged trace per size are written to the output directory.
    """
    sizes = [int(s) for s in sizes]
    d = config.toy.dim if config.problem_kind == "toy" else None
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    penalty = config.make_penalty()
    loss = LogisticLoss()

    full_data = None
    if config.problem_kind == "file":
        full_data = load_libsvm(config.data_path)
        d = full_data.dim
    for s in sizes:
        if s <= 0 or s > d:
            raise ConfigError(f"block size {s} not in [1, {d}]")

    epsilon = next((s.epsilon for s in config.solvers
                    if s.kind == "rbcd" and s.sampler == "importance"), 0.2)
    traces_per_size = {s: [] for s in sizes}

    for rep in range(config.replicates):
        train, test = _replicate_data(config, rep, full_data)
        problem = DesignProblem(train.features, train.labels, loss, penalty,
                                config.lam)
        gist_cfg = SolverConfig(
            max_iterations=config.gist_max_iterations,
            violation_tolerance=config.violation_tolerance,
            seed=derive_seed(config.seed, rep, 1),
        )
        gist_result = gist_solve(problem, gist_cfg)

        for size in sizes:
            m = max(1, problem.dim // size)
            partition = make_uniform_partition(problem.dim, m)
            budget = max(1, min(gist_result.iterations * m,
                                config.rbcd_iteration_cap))
            cfg = _budget_config(budget,
                                 derive_seed(config.seed, rep, 1000 + size), m)
            if m == 1:
                result = rbcd_solve(problem, partition, CyclicSelector(1), cfg)
            else:
                result = rbcd_solve(problem, partition,
                                    ImportanceSelector(m, epsilon), cfg)
            write_trace(out / trace_filename("is-rbcd", rep, size),
                        result.trace)
            traces_per_size[size].append(result.trace)
            if echo is not None:
                echo(f"rep {rep} size {size:4d}: m={m}, budget={budget}, "
                     f"iterations={result.iterations}, "
                     f"flops={result.flops.total}")

    for size, traces in traces_per_size.items():
        _write_averaged_trace(out / f"avg_size{size}.csv", traces)
    return traces_per_size


def _write_averaged_trace(path, traces) -> None:
    """Row-wise mean over replicate traces, truncated to the shortest one."""
    n_rows = min(len(t) for t in traces)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("iteration", "flops", "objective", "violation",
                         "wall_time_s"))
        for j in range(n_rows):
            recs = [t[j] for t in traces]
            viols = [r.violation for r in recs]
            viol = ("" if any(v is None for v in viols)
                    else repr(float(np.mean(viols))))
            writer.writerow([
                recs[0].iteration,
                repr(float(np.mean([r.flops for r in recs]))),
                repr(float(np.mean([r.objective for r in recs]))),
                viol,
                repr(float(np.mean([r.wall_time_s for r in recs]))),
            ])


def summarize_directory(directory, echo=print) -> list[SummaryRow]:
    """Re-aggregate the per-replicate metrics of a finished experiment."""
    directory = Path(directory)
    metrics_path = directory / "metrics.csv"
    if not metrics_path.exists():
        raise OSError(f"no metrics.csv in {directory}")
    metric_rows = read_metrics(metrics_path)
    order = []
    for r in metric_rows:
        if r["solver"] not in order:
            order.append(r["solver"])
    summary = _aggregate(metric_rows, order)
    write_summary(directory / "summary.csv", summary)
    if echo is not None:
        echo(format_summary_table(summary))
    return summary
