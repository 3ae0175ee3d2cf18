"""Experiment orchestration: seeded pipelines, grids, fits, serialization.

Every pipeline is a pure function of (config, rng); trial i always runs on
seed_base + i, so outputs are byte-identical across re-runs and across
worker counts.  Wall-clock time is kept out of every serialized artifact
for the same reason.  Growth exponents come from a least-squares fit of
log(median max) against log T; scaling regressions compare freshly
computed metrics against frozen constants checked into the package data.
"""

import json
import math
import os
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace
from typing import Callable, Optional, Sequence

from .adversary import adversary_run, fractal_ratio, lower_bound_experiment, \
    sphere_stress
from .anticonc import (hadamard_instance, pairwise_counterexample,
                       random_pairwise_instance, random_uncorrelated_instance,
                       verify_pairwise, verify_uncorrelated)
from .core import DistributionSpec, spec_from_config, spec_to_config
from .errors import PairingError
from .problems import (PointStream, allocate_cardinal, allocate_ordinal,
                       dyadic_box_discrepancy, dyadic_interval_discrepancy,
                       interval_signer, max_dyadic_discrepancy, tree_depth,
                       tusnady_signer)
from .haar import DyadicBox, DyadicInterval
from .rng import SeededRng
from .signer import run_stream
from .spectral import balance_general

CONFIG_FORMAT_VERSION = 1
REGRESSION_SLACK = 0.20
REGRESSION_PATH = os.path.join(os.path.dirname(__file__), "data",
                               "regression_constants.json")

SUBCOMMANDS = ("balance", "interval", "tusnady", "envy", "adversary",
               "lowerbound", "sphere", "fractal", "anticonc", "fit",
               "compare")
# these consume trials internally (as seeds) and execute exactly once
_SINGLE_SHOT = ("fit", "compare")


@dataclass
class ExperimentConfig:
    """Everything a pipeline needs, serializable as versioned JSON."""

    subcommand: str
    T: int = 1024
    T_grid: tuple[int, ...] = ()
    trials: int = 1
    seed_base: int = 0
    d: int = 1
    n: int = 8
    algorithm: str = "cosh"
    algorithms: tuple[str, ...] = ("cosh", "random")
    target: str = "interval"            # fit / compare workload
    probe_count: int = 0
    spec_config: Optional[dict] = None
    mode: str = "cardinal"              # envy flavor
    general: bool = False               # balance through the eigenbasis
    dump_basis: bool = False
    h_grid: tuple[int, ...] = (8, 12, 16, 20)
    magnitude: float = 8.0
    family: str = "hadamard"            # anticonc instance family
    delta: float = 0.1
    count: int = 100
    figures: bool = True
    out_dir: str = "."

    def validate(self) -> None:
        if self.subcommand not in SUBCOMMANDS:
            raise ValueError(f"unknown subcommand {self.subcommand!r}")
        if self.trials < 1:
            raise ValueError("trials must be >= 1")
        if self.T < 0:
            raise ValueError("T must be >= 0")
        if self.d < 1 or self.n < 1:
            raise ValueError("d and n must be >= 1")
        if self.probe_count < 0:
            raise ValueError("probe_count must be >= 0")
        if self.count < 1:
            raise ValueError("count must be >= 1")
        grid = self.T_grid
        if grid:
            if any(T < 1 or T & (T - 1) for T in grid):
                raise ValueError(f"T grid must be powers of two, got {grid}")
            if list(grid) != sorted(set(grid)):
                raise ValueError(f"T grid must be strictly ascending, got {grid}")
        if self.dump_basis and not self.general:
            raise ValueError("--dump-basis needs the eigenbasis path "
                             "(general balancing)")
        if self.mode not in ("cardinal", "ordinal"):
            raise ValueError(f"unknown envy mode {self.mode!r}")
        if self.family not in ("hadamard", "counterexample", "random"):
            raise ValueError(f"unknown anticonc family {self.family!r}")
        if self.subcommand == "fit":
            if self.target not in ("interval", "balance", "sphere"):
                raise ValueError(f"unknown fit target {self.target!r}")
            if len(self.T_grid) < 4:
                raise ValueError("fit needs a T grid with at least 4 points")
        # compare accepts "adversary" so the pairing refusal can surface
        if self.subcommand == "compare" and self.target not in (
                "interval", "balance", "sphere", "adversary"):
            raise ValueError(f"unknown compare target {self.target!r}")

    def to_json(self) -> dict:
        obj = asdict(self)
        obj["format_version"] = CONFIG_FORMAT_VERSION
        for key in ("T_grid", "algorithms", "h_grid"):
            obj[key] = list(obj[key])
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        data = dict(obj)
        version = data.pop("format_version", None)
        if version != CONFIG_FORMAT_VERSION:
            raise ValueError(f"config format_version {version!r} not "
                             f"supported (expected {CONFIG_FORMAT_VERSION})")
        for key in ("T_grid", "algorithms", "h_grid"):
            if key in data:
                data[key] = tuple(data[key])
        cfg = cls(**data)
        cfg.validate()
        return cfg


@dataclass
class PipelineResult:
    summary: dict
    trace: Optional[list[tuple[int, float, float]]] = None
    # suffix -> (header, rows); each becomes its own CSV next to the trace
    tables: dict = field(default_factory=dict)


@dataclass
class ExperimentOutcome:
    config: ExperimentConfig
    summaries: list[dict]
    files: list[str]
    log_lines: list[str]


# -- pipelines -------------------------------------------------------------

def _spec_for(cfg: ExperimentConfig) -> DistributionSpec:
    if cfg.spec_config is not None:
        return spec_from_config(cfg.spec_config)
    return DistributionSpec.hadamard_rows(cfg.n)


def _pipeline_balance(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    spec = _spec_for(cfg)
    if cfg.general:
        res = balance_general(spec, cfg.T, rng=rng, algorithm=cfg.algorithm)
    else:
        res = run_stream(spec, cfg.T, rng=rng, algorithm=cfg.algorithm)
    summary = dict(res.summary(), algorithm=res.algorithm,
                   final_linf=res.final_linf, kind=spec.kind, n=spec.n)
    tables = {}
    if cfg.general and cfg.dump_basis:
        basis = res.extra["basis"]
        cov = res.extra["covariance"]
        n = spec.n
        tables["basis"] = ([f"u{j}" for j in range(n)],
                           [list(map(float, basis.U[i])) for i in range(n)])
        tables["eigenvalues"] = (["eigenvalue"],
                                 [[float(x)] for x in basis.eigenvalues])
        tables["covariance"] = ([f"p{j}" for j in range(n)],
                                [list(map(float, cov.P[i])) for i in range(n)])
    return PipelineResult(summary=summary, trace=res.trace, tables=tables)


def _interval_metric(geo) -> int:
    """Max dyadic interval discrepancy over every axis, at final time."""
    worst = 0
    for i in range(geo.points.d):
        axis_pts = PointStream(points=tuple((x,) for x in geo.points.axis(i)),
                               d=1)
        worst = max(worst, max_dyadic_discrepancy(
            geo.signs, axis_pts, max_scale=geo.max_scale)[0])
    return worst


def _probe_intervals(geo, count: int, rng: SeededRng) -> int:
    """count random dual-route interval checks; a mismatch raises."""
    J = geo.max_scale
    T = geo.points.T
    for _ in range(count):
        axis = rng.randint(geo.points.d)
        level = rng.randint(J + 1)
        m = rng.randint(1 << level)
        dyadic_interval_discrepancy(geo.signs, geo.points,
                                    DyadicInterval(level, m), axis, T)
    return count


def _probe_boxes(geo, count: int, rng: SeededRng) -> int:
    J = geo.max_scale
    T = geo.points.T
    for _ in range(count):
        axes = []
        for _ in range(geo.points.d):
            level = rng.randint(J + 1)
            axes.append(DyadicInterval(level, rng.randint(1 << level)))
        dyadic_box_discrepancy(geo.signs, geo.points, DyadicBox(tuple(axes)), T)
    return count


def _pipeline_interval(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    pts = PointStream.uniform(cfg.d, cfg.T, rng.derive("points"))
    geo = interval_signer(pts, algorithm=cfg.algorithm, rng=rng)
    probes = _probe_intervals(geo, cfg.probe_count, rng.derive("probes"))
    summary = dict(geo.run.summary(), algorithm=cfg.algorithm, d=cfg.d,
                   max_dyadic=_interval_metric(geo),
                   probes_checked=probes, probe_failures=0)
    return PipelineResult(summary=summary, trace=geo.run.trace)


def _pipeline_tusnady(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    pts = PointStream.uniform(cfg.d, cfg.T, rng.derive("points"))
    geo = tusnady_signer(pts, algorithm=cfg.algorithm, rng=rng)
    probes = _probe_boxes(geo, cfg.probe_count, rng.derive("probes"))
    summary = dict(geo.run.summary(), algorithm=cfg.algorithm, d=cfg.d,
                   max_dyadic=max_dyadic_discrepancy(geo.signs, pts)[0],
                   coords_touched=geo.run.extra.get("coords_touched", 0),
                   probes_checked=probes, probe_failures=0)
    return PipelineResult(summary=summary, trace=geo.run.trace)


def _pipeline_envy(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    vals = rng.derive("valuations")
    v1 = [vals.uniform() for _ in range(cfg.T)]
    v2 = [vals.uniform() for _ in range(cfg.T)]
    if cfg.mode == "cardinal":
        res = allocate_cardinal(v1, v2, rng=rng, algorithm=cfg.algorithm)
        e1, e2 = res.envy_trace[-1][1:] if res.envy_trace else (0.0, 0.0)
        summary = dict(res.run.summary(), algorithm=cfg.algorithm,
                       mode="cardinal", max_envy=res.max_envy,
                       final_envy_1=e1, final_envy_2=e2)
    elif cfg.mode == "ordinal":
        res = allocate_ordinal(v1, v2, rng=rng, algorithm=cfg.algorithm)
        bound = res.envy_trace[-1][2] if res.envy_trace else 0
        summary = dict(res.run.summary(), algorithm=cfg.algorithm,
                       mode="ordinal", max_envy=res.max_envy,
                       final_bound=bound)
    else:
        raise ValueError(f"unknown envy mode {cfg.mode!r}")
    return PipelineResult(summary=summary, trace=res.run.trace)


def _pipeline_adversary(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    res = adversary_run(cfg.n, cfg.T, algorithm=cfg.algorithm, rng=rng)
    summary = dict(res.summary(), algorithm=cfg.algorithm, n=cfg.n,
                   final_norm_sq=res.extra["final_norm_sq"],
                   norm_sq_floor=res.extra["norm_sq_floor"])
    return PipelineResult(summary=summary, trace=res.trace)


def _pipeline_lowerbound(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    spec = _spec_for(cfg)
    rep = lower_bound_experiment(spec, cfg.count, rng=rng,
                                 algorithm=cfg.algorithm)
    summary = {"n": rep.n, "k": rep.k, "threshold": rep.threshold,
               "trials": rep.trials, "hits": rep.hits,
               "frequency": rep.frequency, "algorithm": rep.algorithm,
               "seed": rng.seed}
    return PipelineResult(summary=summary)


def _pipeline_sphere(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    res = sphere_stress(cfg.n, cfg.T, rng=rng, algorithm=cfg.algorithm)
    summary = dict(res.summary(), algorithm=cfg.algorithm, n=cfg.n,
                   max_l2=res.extra["max_l2"],
                   argmax_t_l2=res.extra["argmax_t_l2"])
    tables = {"l2": (["t", "max_l2"],
                     [[t, v] for t, v in res.extra["l2_trace"]])}
    return PipelineResult(summary=summary, trace=res.trace, tables=tables)


def _pipeline_fractal(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    rows = []
    betas = {}
    for h in cfg.h_grid:
        rep = fractal_ratio(h, cfg.magnitude)
        betas[h] = rep.beta
        rows.append([h, rep.lhs, rep.rhs, rep.beta, rep.p_hit, rep.p_passed,
                     rep.scale_log])
    summary = {"magnitude": cfg.magnitude, "h_grid": list(cfg.h_grid),
               "betas": [betas[h] for h in cfg.h_grid], "seed": rng.seed}
    tables = {"table": (["h", "lhs", "rhs", "beta", "p_hit", "p_passed",
                         "scale_log"], rows)}
    return PipelineResult(summary=summary, tables=tables)


def _pipeline_anticonc(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    rows = []
    if cfg.family == "hadamard":
        inst = hadamard_instance(cfg.n)
        u = verify_uncorrelated(inst)
        p = verify_pairwise(inst)
        rows.append(["hadamard-uncorrelated", cfg.n, u.lhs, u.rhs, u.holds])
        rows.append(["hadamard-pairwise", cfg.n, p.lhs, p.rhs, p.holds])
    elif cfg.family == "counterexample":
        rep = pairwise_counterexample(cfg.delta)
        # rhs here is E[sum |a_i X_i|]; the (failing) bound's floor is rhs/s
        rows.append(["counterexample", 2, rep.lhs, rep.rhs,
                     rep.lhs >= rep.rhs / 2 - 1e-12])
    elif cfg.family == "random":
        for i in range(cfg.count):
            n = 1 + rng.randint(6)
            iu = random_uncorrelated_instance(n, rng.derive(f"u{i}"))
            ru = verify_uncorrelated(iu)
            rows.append([f"random-uncorrelated-{i}", n, ru.lhs, ru.rhs,
                         ru.holds])
            ip = random_pairwise_instance(n, rng.derive(f"p{i}"))
            rp = verify_pairwise(ip)
            rows.append([f"random-pairwise-{i}", n, rp.lhs, rp.rhs, rp.holds])
    else:
        raise ValueError(f"unknown anticonc family {cfg.family!r}")
    summary = {"family": cfg.family, "rows": len(rows),
               "all_hold": all(r[4] for r in rows), "seed": rng.seed}
    return PipelineResult(summary=summary,
                          tables={"results": (["instance", "n", "lhs", "rhs",
                                               "holds"], rows)})


def _fit_metric(cfg: ExperimentConfig, T: int, rng: SeededRng) -> float:
    if cfg.target == "interval":
        pts = PointStream.uniform(cfg.d, T, rng.derive("points"))
        geo = interval_signer(pts, algorithm=cfg.algorithm, rng=rng)
        return float(_interval_metric(geo))
    if cfg.target == "balance":
        return run_stream(_spec_for(cfg), T, rng=rng,
                          algorithm=cfg.algorithm).max_linf
    if cfg.target == "sphere":
        return sphere_stress(cfg.n, T, rng=rng,
                             algorithm=cfg.algorithm).extra["max_l2"]
    raise ValueError(f"unknown fit target {cfg.target!r}")


def _pipeline_fit(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    if len(cfg.T_grid) < 4:
        raise ValueError("fit needs a T grid with at least 4 points")
    medians = []
    for T in cfg.T_grid:
        vals = [_fit_metric(cfg, T, SeededRng(cfg.seed_base + i))
                for i in range(cfg.trials)]
        medians.append((T, statistics.median(vals)))
    fit = fit_growth(medians)
    summary = {"target": cfg.target, "algorithm": cfg.algorithm,
               "exponent": fit.exponent, "intercept": fit.intercept,
               "residual": fit.residual, "grid": list(cfg.T_grid),
               "medians": [m for _, m in medians], "trials": cfg.trials,
               "seed": cfg.seed_base}
    return PipelineResult(summary=summary,
                          tables={"medians": (["T", "median"],
                                              [[T, m] for T, m in medians])})


def _pipeline_compare(cfg: ExperimentConfig, rng: SeededRng) -> PipelineResult:
    table = compare(cfg.target, cfg.algorithms,
                    [cfg.seed_base + i for i in range(cfg.trials)],
                    cfg.T, cfg=cfg)
    rows = [[seed] + [row[a] for a in table.algorithms]
            for seed, row in table.rows]
    first, rest = table.algorithms[0], table.algorithms[1:]
    summary = {"target": cfg.target, "algorithms": list(table.algorithms),
               "seeds": len(table.rows), "seed": cfg.seed_base,
               "wins": {f"{first}<{b}": table.wins(first, b) for b in rest}}
    return PipelineResult(summary=summary,
                          tables={"table": (["seed"] + list(table.algorithms),
                                            rows)})


_PIPELINES: dict[str, Callable[[ExperimentConfig, SeededRng], PipelineResult]]
_PIPELINES = {"balance": _pipeline_balance, "interval": _pipeline_interval,
              "tusnady": _pipeline_tusnady, "envy": _pipeline_envy,
              "adversary": _pipeline_adversary,
              "lowerbound": _pipeline_lowerbound, "sphere": _pipeline_sphere,
              "fractal": _pipeline_fractal, "anticonc": _pipeline_anticonc,
              "fit": _pipeline_fit, "compare": _pipeline_compare}


# -- paired comparison ------------------------------------------------------

@dataclass(frozen=True)
class ComparisonTable:
    target: str
    algorithms: tuple[str, ...]
    rows: tuple[tuple[int, dict], ...]   # (seed, {algorithm: metric})

    def wins(self, a: str, b: str) -> int:
        return sum(1 for _, row in self.rows if row[a] < row[b])


def compare(target: str, algorithms: Sequence[str], seeds: Sequence[int],
            T: int, cfg: Optional[ExperimentConfig] = None) -> ComparisonTable:
    """Run every algorithm on the SAME stream per seed and tabulate maxima.

    Streams are drawn from rng.derive("points"/"stream") before any sign
    is chosen, so they are identical across algorithms by construction.
    The adaptive adversary has no such stream: its inputs depend on the
    signs, so pairing is refused.
    """
    if target == "adversary":
        raise PairingError("adaptive adversary streams diverge across "
                           "algorithms; paired comparison is undefined")
    if cfg is None:
        cfg = ExperimentConfig(subcommand="compare", target=target, T=T)
    if not algorithms:
        raise ValueError("need at least one algorithm")
    rows = []
    for seed in seeds:
        row = {}
        for algo in algorithms:
            run_cfg = replace(cfg, algorithm=algo)
            row[algo] = _fit_metric(run_cfg, T, SeededRng(seed))
        rows.append((int(seed), row))
    return ComparisonTable(target=target, algorithms=tuple(algorithms),
                           rows=tuple(rows))


# -- growth fitting ----------------------------------------------------------

@dataclass(frozen=True)
class GrowthFit:
    exponent: float
    intercept: float
    residual: float   # rms of log-domain residuals


def fit_growth(points: Sequence[tuple[float, float]]) -> GrowthFit:
    """Least-squares slope of log(median max) against log T.

    Needs at least 4 distinct positive grid points with positive medians;
    anything else is a degenerate fit and raises.
    """
    if len(points) < 4:
        raise ValueError(f"need >= 4 grid points, got {len(points)}")
    xs, ys = [], []
    for T, y in points:
        if not T > 0 or not y > 0:
            raise ValueError(f"grid values must be positive, got ({T}, {y})")
        xs.append(math.log(float(T)))
        ys.append(math.log(float(y)))
    if len(set(xs)) != len(xs):
        raise ValueError("degenerate grid: repeated T values")
    m = len(xs)
    xbar = math.fsum(xs) / m
    ybar = math.fsum(ys) / m
    sxx = math.fsum((x - xbar) ** 2 for x in xs)
    sxy = math.fsum((x - xbar) * (y - ybar) for x, y in zip(xs, ys))
    slope = sxy / sxx
    intercept = ybar - slope * xbar
    rss = math.fsum((y - (intercept + slope * x)) ** 2
                    for x, y in zip(xs, ys))
    return GrowthFit(exponent=slope, intercept=intercept,
                     residual=math.sqrt(rss / m))


# -- frozen scaling regressions ----------------------------------------------

def correlated_spec(n: int) -> DistributionSpec:
    """Half all-ones, half a single spike: strongly correlated coordinates."""
    from .core import SparseUpdate
    ones = SparseUpdate(tuple((i, 1.0) for i in range(n)), n)
    spike = SparseUpdate(((0, 1.0),), n)
    return DistributionSpec.finite_support(
        [(ones, 0.25), (ones.negate(), 0.25),
         (spike, 0.25), (spike.negate(), 0.25)])


def regression_configs() -> dict[str, tuple[ExperimentConfig, str]]:
    """The frozen-regression workloads: key -> (config, summary field)."""
    return {
        "interval-d1-T16384": (
            ExperimentConfig(subcommand="interval", T=1 << 14, d=1,
                             figures=False), "max_dyadic"),
        "tusnady-d2-T1024": (
            ExperimentConfig(subcommand="tusnady", T=1 << 10, d=2,
                             figures=False), "max_dyadic"),
        "balance-n8-T4096": (
            ExperimentConfig(subcommand="balance", T=1 << 12, n=8,
                             general=True,
                             spec_config=spec_to_config(correlated_spec(8)),
                             figures=False), "max_linf"),
        "envy-cardinal-T4096": (
            ExperimentConfig(subcommand="envy", T=1 << 12, mode="cardinal",
                             figures=False), "max_envy"),
    }


def compute_regression_metrics() -> dict[str, float]:
    out = {}
    for key, (cfg, field_name) in sorted(regression_configs().items()):
        result = _PIPELINES[cfg.subcommand](cfg, SeededRng(cfg.seed_base))
        out[key] = float(result.summary[field_name])
    return out


def load_regression_table(path: Optional[str] = None) -> dict:
    with open(path or REGRESSION_PATH, "r", encoding="utf-8") as fh:
        table = json.load(fh)
    if table.get("format_version") != CONFIG_FORMAT_VERSION:
        raise ValueError("unsupported regression table version")
    return table


def check_regression(key: str, value: float, table: Optional[dict] = None,
                     slack: float = REGRESSION_SLACK) -> tuple[bool, float]:
    """Compare a fresh metric against its frozen constant, +-slack."""
    if table is None:
        table = load_regression_table()
    expected = float(table["entries"][key]["value"])
    return abs(value - expected) <= slack * abs(expected), expected


# -- execution ---------------------------------------------------------------

def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_text(path: str, text: str) -> str:
    os.makedirs(os.path.dirname(os.path.abspath(path)), exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)
    return path


def _csv_text(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    lines = [f"# format_version={CONFIG_FORMAT_VERSION}", ",".join(header)]
    lines.extend(",".join(_format_cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


def _run_trial(cfg: ExperimentConfig, trial: int) -> tuple[int, PipelineResult]:
    seed = cfg.seed_base + trial
    return trial, _PIPELINES[cfg.subcommand](cfg, SeededRng(seed))


def _worker_count() -> int:
    raw = os.environ.get("BALANCER_WORKERS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def run_experiment(cfg: ExperimentConfig) -> ExperimentOutcome:
    """Execute the configured pipeline per trial and serialize everything.

    Writes one JSON summary per trial, one aggregate CSV across trials,
    per-trial trace/table CSVs, and (unless disabled) a PNG per trace.
    Outputs depend only on (config, seeds); errors from inner oracles
    propagate with their module and step attached.
    """
    cfg.validate()
    trials = 1 if cfg.subcommand in _SINGLE_SHOT else cfg.trials
    workers = _worker_count()
    if workers > 1 and trials > 1:
        with ProcessPoolExecutor(max_workers=min(workers, trials)) as pool:
            results = list(pool.map(_run_trial, [cfg] * trials,
                                    range(trials)))
    else:
        results = [_run_trial(cfg, i) for i in range(trials)]
    results.sort(key=lambda pair: pair[0])

    files: list[str] = []
    summaries: list[dict] = []
    log_lines: list[str] = []
    out = cfg.out_dir
    name = cfg.subcommand
    for trial, result in results:
        summaries.append(result.summary)
        base = os.path.join(out, f"{name}_trial{trial:03d}")
        files.append(_write_text(
            base + ".json",
            json.dumps(result.summary, sort_keys=True, indent=2) + "\n"))
        if result.trace is not None:
            trace_csv = base + "_trace.csv"
            files.append(_write_text(
                trace_csv, _csv_text(("t", "linf", "phi"), result.trace)))
            if cfg.figures:
                from .figures import render_trace
                files.append(render_trace(result.trace, base + "_trace.png",
                                          f"{name} trial {trial}"))
        for suffix, (header, rows) in sorted(result.tables.items()):
            files.append(_write_text(f"{base}_{suffix}.csv",
                                     _csv_text(header, rows)))
        if "probes_checked" in result.summary:
            log_lines.append(
                f"trial {trial}: {result.summary['probes_checked']} probe "
                f"oracle agreements, {result.summary['probe_failures']} "
                f"failures")
        if cfg.subcommand == "fit" and cfg.figures:
            medians = list(zip(result.summary["grid"],
                               result.summary["medians"]))
            fit = GrowthFit(exponent=result.summary["exponent"],
                            intercept=result.summary["intercept"],
                            residual=result.summary["residual"])
            from .figures import render_growth
            files.append(render_growth(medians, fit, base + "_growth.png",
                                       f"{cfg.target} growth"))

    columns = sorted({k for s in summaries for k in s
                      if isinstance(s[k], (int, float, str, bool))})
    agg_rows = [[s.get(c, "") for c in columns] for s in summaries]
    files.append(_write_text(os.path.join(out, f"{name}_summary.csv"),
                             _csv_text(columns, agg_rows)))
    return ExperimentOutcome(config=cfg, summaries=summaries, files=files,
                             log_lines=log_lines)
