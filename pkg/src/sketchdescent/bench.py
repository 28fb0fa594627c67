"""Benchmark driver: sweep coordinates, average repetitions, emit CSV.

A plan is a cross product of datasets, sampling rules and momentum values
for one method and sketch family. Every cell runs `reps` independent
repetitions whose seeds are derived from the base seed and the cell
coordinates, so results do not depend on execution order or worker count.
Within a cell, repetitions are averaged pointwise over the checkpoint grid;
runs that stop early hold their final value until the longest grid ends.

Output is a summary CSV (one line per cell), a .meta sidecar recording the
plan, derived seeds and averaging policy, and optionally one series file
per cell for plotting. Wall-time columns are flagged ":walltime" in the
header: they are the only non-deterministic fields in any output file.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DivergenceError, InvalidConfigError, SizeLimitError
from .linalg import SpdFactor
from .loaders import load_libsvm, load_matrix_market
from .problems import GenSpec, LinearSystem, generate, make_consistent
from .rng import derive_seed
from .sampling import parse_rule
from .sketching import SketchFamily
from .solvers import SolverConfig, run_method
from .theory import spectral_report

METHODS = ("ssd", "ssdm", "sd", "cg")
METRICS = ("auto", "identity", "system", "normal")

# Standard sample-size grids for the greedy Kaczmarz and greedy coordinate
# descent sweeps; tau_grid clips either to the family size at hand.
GK_TAU_GRID = (1, 5, 20, 50, 100)
GCD_TAU_GRID = (1, 5, 10, 20, 30)


def tau_grid(base, q: int) -> list:
    """Ascending subset of `base` below q, with q itself appended."""
    return sorted({t for t in base if t < q} | {q})


@dataclass(frozen=True)
class DatasetSpec:
    """Where a system comes from: a generator recipe or a file."""

    kind: str  # gen | mtx | libsvm
    gen: GenSpec | None = None
    path: str | None = None
    m_limit: int | None = None
    data_seed: int = 0

    def __post_init__(self):
        if self.kind == "gen":
            if self.gen is None:
                raise InvalidConfigError("gen dataset needs a GenSpec")
        elif self.kind in ("mtx", "libsvm"):
            if not self.path:
                raise InvalidConfigError(f"{self.kind} dataset needs a path")
        else:
            raise InvalidConfigError(f"unknown dataset kind {self.kind!r}")

    @property
    def label(self) -> str:
        if self.kind == "gen":
            return self.gen.label
        return f"{self.kind}:{os.path.basename(self.path)}"


def parse_family(text: str) -> tuple[str, int | None]:
    """Family spelling from the CLI: row|lsqcol|block:<c>|spectral|full."""
    if text.startswith("block:"):
        try:
            size = int(text.split(":", 1)[1])
        except ValueError:
            raise InvalidConfigError(f"bad block size in {text!r}") from None
        return "block", size
    if text in ("row", "lsqcol", "spectral", "full"):
        return text, None
    raise InvalidConfigError(f"unknown sketch family {text!r}")


def _is_spd(A: np.ndarray) -> bool:
    if A.shape[0] != A.shape[1]:
        return False
    if np.abs(A - A.T).max() > 1e-12 * max(1.0, np.abs(A).max()):
        return False
    try:
        SpdFactor(A)
    except Exception:
        return False
    return True


def build_system(dataset: DatasetSpec, family_kind: str,
                 metric: str = "auto") -> LinearSystem:
    """Load or generate the matrix and attach the geometry for the family.

    The protocol keeps G = B throughout. metric "auto" picks the natural
    geometry: identity for row/block sketches on a general matrix, B = A
    for row sketches on an SPD matrix (coordinate descent) and for
    spectral/full sketches, B = A'A for column sketches. "identity",
    "system" and "normal" force those choices.
    """
    if metric not in METRICS:
        raise InvalidConfigError(f"unknown metric {metric!r}")
    if dataset.kind == "gen":
        base = generate(dataset.gen)
        A, b, x_star = base.A, base.b, base.x_star
        label = base.label
    else:
        if dataset.kind == "mtx":
            A = load_matrix_market(dataset.path)
            if dataset.m_limit is not None:
                A = A[: dataset.m_limit]
        else:
            A = load_libsvm(dataset.path, m_limit=dataset.m_limit)
        base = make_consistent(A, seed=dataset.data_seed, label=dataset.label)
        A, b, x_star = base.A, base.b, base.x_star
        label = dataset.label

    spd = _is_spd(A)
    if metric == "auto":
        if family_kind in ("spectral", "full"):
            metric = "system"
        elif family_kind == "lsqcol":
            metric = "normal"
        elif family_kind == "row" and spd:
            metric = "system"
        else:
            metric = "identity"
    if metric == "system":
        if not spd:
            raise InvalidConfigError(
                f"metric 'system' needs an SPD matrix; {label} is not"
            )
        BG = A
    elif metric == "normal":
        BG = A.T @ A
        BG = 0.5 * (BG + BG.T)
    else:
        BG = None
    return LinearSystem(A=A, b=b, B=BG, G=BG, x_star=x_star, label=label)


@dataclass
class ExperimentPlan:
    """Everything one benchmark invocation will run."""

    datasets: list
    method: str = "ssd"
    family: str = "row"
    rules: list = field(default_factory=lambda: [parse_rule("uniform")])
    gammas: list = field(default_factory=lambda: [0.0])
    omega: float = 1.0
    tol: float = 1e-10
    max_iters: int = 100_000
    reps: int = 10
    seed: int = 0
    x0: str = "ones1000"
    check_every: int | None = None
    metric: str = "auto"
    workers: int = 1
    theory: bool = False

    def validate(self) -> None:
        if self.method not in METHODS:
            raise InvalidConfigError(f"unknown method {self.method!r}")
        if not self.datasets:
            raise InvalidConfigError("plan has no datasets")
        if not self.rules:
            raise InvalidConfigError("plan has no sampling rules")
        if not self.gammas:
            raise InvalidConfigError("plan has no gamma values")
        if self.reps < 1:
            raise InvalidConfigError("reps must be >= 1")
        if self.workers < 1:
            raise InvalidConfigError("workers must be >= 1")
        if self.method == "ssd" and any(g != 0.0 for g in self.gammas):
            raise InvalidConfigError(
                "method 'ssd' has no momentum; use 'ssdm' for gamma != 0"
            )
        parse_family(self.family)

    def cells(self) -> list[tuple]:
        """(dataset, rule, gamma) coordinates in deterministic order."""
        if self.method in ("sd", "cg"):
            return [(ds, None, 0.0) for ds in self.datasets]
        return [(ds, rule, gamma) for ds in self.datasets
                for rule in self.rules for gamma in self.gammas]


@dataclass
class ResultRow:
    """Aggregated outcome of one (dataset, rule, gamma) cell."""

    dataset: str
    method: str
    family: str
    rule: str
    gamma: float
    omega: float
    reps: int
    seed: int
    rep_seeds: list
    success: int
    diverged: int
    mean_iters: float
    median_iters: float
    mean_final_residual: float
    mean_final_relerr: float
    mean_time: float
    series_k: np.ndarray
    series_residual: np.ndarray
    series_relerr: np.ndarray
    series_time: np.ndarray

    @property
    def series_name(self) -> str:
        raw = f"{self.dataset}_{self.method}_{self.family}_{self.rule}_g{self.gamma:g}"
        for ch in ":,/\\ ":
            raw = raw.replace(ch, "-")
        return raw


def _pad(values: np.ndarray, length: int) -> np.ndarray:
    """Hold the final value until the target length."""
    if values.size >= length:
        return values[:length]
    out = np.empty(length)
    out[: values.size] = values
    out[values.size:] = values[-1]
    return out


def _aggregate(traces: list, diverged: int, coord, plan: ExperimentPlan,
               rep_seeds: list) -> ResultRow:
    dataset, rule, gamma = coord
    rule_label = rule.label if rule is not None else "-"
    if traces:
        longest = max(traces, key=lambda t: t.ks.size)
        L = longest.ks.size
        series_k = longest.ks.copy()
        series_res = np.mean([_pad(t.residuals, L) for t in traces], axis=0)
        series_rel = np.mean([_pad(t.rel_errors, L) for t in traces], axis=0)
        series_time = np.mean([_pad(t.times, L) for t in traces], axis=0)
        iters = [t.iterations for t in traces if t.converged]
        success = len(iters)
        mean_iters = float(np.mean(iters)) if iters else float("nan")
        median_iters = float(np.median(iters)) if iters else float("nan")
        mean_final_res = float(np.mean([t.residuals[-1] for t in traces]))
        mean_final_rel = float(np.mean([t.rel_errors[-1] for t in traces]))
        mean_time = float(np.mean([t.times[-1] for t in traces]))
    else:
        series_k = np.array([], dtype=np.intp)
        series_res = series_rel = series_time = np.array([])
        success = 0
        mean_iters = median_iters = float("nan")
        mean_final_res = mean_final_rel = mean_time = float("nan")
    return ResultRow(
        dataset=dataset.label,
        method=plan.method,
        family=plan.family if plan.method in ("ssd", "ssdm") else "-",
        rule=rule_label,
        gamma=gamma,
        omega=plan.omega,
        reps=plan.reps,
        seed=plan.seed,
        rep_seeds=rep_seeds,
        success=success,
        diverged=diverged,
        mean_iters=mean_iters,
        median_iters=median_iters,
        mean_final_residual=mean_final_res,
        mean_final_relerr=mean_final_rel,
        mean_time=mean_time,
        series_k=series_k,
        series_residual=series_res,
        series_relerr=series_rel,
        series_time=series_time,
    )


def _run_cell(plan: ExperimentPlan, coord) -> ResultRow:
    """All repetitions of one cell. Runs in a worker process when asked."""
    dataset, rule, gamma = coord
    kind, block_size = parse_family(plan.family)
    system = build_system(dataset, kind, plan.metric)
    family = None
    if plan.method in ("ssd", "ssdm"):
        family = SketchFamily(kind, system, block_size=block_size)
    rule_label = rule.label if rule is not None else "-"
    traces = []
    diverged = 0
    rep_seeds = []
    for rep in range(plan.reps):
        rep_seed = derive_seed(plan.seed, dataset.label, rule_label,
                               repr(float(gamma)), rep)
        rep_seeds.append(rep_seed)
        cfg = SolverConfig(
            omega=plan.omega,
            gamma=gamma,
            tol=plan.tol,
            max_iters=plan.max_iters,
            seed=rep_seed,
            x0=plan.x0,
            check_every=plan.check_every,
        )
        try:
            traces.append(run_method(plan.method, system, family, rule, cfg))
        except DivergenceError:
            diverged += 1
    return _aggregate(traces, diverged, coord, plan, rep_seeds)


@dataclass
class BenchResult:
    plan: ExperimentPlan
    rows: list
    reports: dict

    @property
    def any_diverged(self) -> bool:
        return any(r.diverged > 0 for r in self.rows)


def run_experiment(plan: ExperimentPlan) -> BenchResult:
    """Execute the full plan.

    workers > 1 distributes cells over processes; the output is identical
    to the serial run because every repetition's seed is derived from its
    coordinates alone.
    """
    plan.validate()
    cells = plan.cells()
    if plan.workers > 1 and len(cells) > 1:
        with ProcessPoolExecutor(max_workers=plan.workers) as pool:
            rows = list(pool.map(_run_cell, [plan] * len(cells), cells))
    else:
        rows = [_run_cell(plan, coord) for coord in cells]

    reports: dict[str, str] = {}
    if plan.theory and plan.method in ("ssd", "ssdm"):
        kind, block_size = parse_family(plan.family)
        for dataset in plan.datasets:
            system = build_system(dataset, kind, plan.metric)
            family = SketchFamily(kind, system, block_size=block_size)
            for rule in plan.rules:
                try:
                    rep = spectral_report(family, rule)
                except SizeLimitError as exc:
                    reports[f"{dataset.label}|{rule.label}"] = f"skipped: {exc}"
                else:
                    reports[f"{dataset.label}|{rule.label}"] = rep.to_text()
    return BenchResult(plan=plan, rows=rows, reports=reports)


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

SUMMARY_COLUMNS = [
    "dataset", "method", "family", "rule", "gamma", "omega", "reps", "seed",
    "success", "diverged", "mean_iters", "median_iters",
    "mean_final_residual", "mean_final_relerr", "mean_time_s:walltime",
]


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(result: BenchResult, path) -> None:
    """Summary CSV, one line per cell, plus a .meta sidecar.

    Floats are printed with repr, the shortest decimal that round-trips, so
    identical runs produce byte-identical files apart from the columns
    flagged :walltime.
    """
    rows = result.rows
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(",".join(SUMMARY_COLUMNS) + "\n")
        for r in rows:
            fields = [
                r.dataset, r.method, r.family, r.rule, _fmt(float(r.gamma)),
                _fmt(float(r.omega)), r.reps, r.seed, r.success, r.diverged,
                _fmt(r.mean_iters), _fmt(r.median_iters),
                _fmt(r.mean_final_residual), _fmt(r.mean_final_relerr),
                _fmt(r.mean_time),
            ]
            fh.write(",".join(_fmt(f) for f in fields) + "\n")
    _emit_meta(result, str(path) + ".meta")


def _emit_meta(result: BenchResult, path) -> None:
    plan = result.plan
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("benchmark metadata\n")
        fh.write(f"method={plan.method}\nfamily={plan.family}\n")
        fh.write(f"omega={plan.omega!r}\ntol={plan.tol!r}\n")
        fh.write(f"max_iters={plan.max_iters}\nreps={plan.reps}\n")
        fh.write(f"seed={plan.seed}\nx0={plan.x0}\nmetric={plan.metric}\n")
        fh.write(f"datasets={[d.label for d in plan.datasets]}\n")
        fh.write(f"rules={[r.label for r in plan.rules]}\n")
        fh.write(f"gammas={[repr(float(g)) for g in plan.gammas]}\n")
        fh.write("averaging=pointwise over checkpoint grid; shorter runs "
                 "hold their final value\n")
        fh.write("nondeterministic_columns=mean_time_s:walltime,time:walltime\n")
        fh.write("rep_seeds: derived per cell as "
                 "base_seed xor blake2b(dataset,rule,gamma,rep)\n")
        for r in result.rows:
            fh.write(f"  {r.dataset}|{r.rule}|g={float(r.gamma)!r}: "
                     f"{r.rep_seeds}\n")
        for key, text in result.reports.items():
            fh.write(f"spectral_report[{key}]:\n")
            for line in text.strip().splitlines():
                fh.write(f"  {line}\n")


def emit_plot_data(result: BenchResult, dirpath) -> None:
    """One averaged series file per cell: k,residual,relerr,time:walltime."""
    os.makedirs(dirpath, exist_ok=True)
    for r in result.rows:
        target = os.path.join(dirpath, r.series_name + ".csv")
        with open(target, "w", encoding="utf-8") as fh:
            fh.write("k,residual,relerr,time:walltime\n")
            for j in range(r.series_k.size):
                fh.write(f"{int(r.series_k[j])},{float(r.series_residual[j])!r},"
                         f"{float(r.series_relerr[j])!r},{float(r.series_time[j])!r}\n")
