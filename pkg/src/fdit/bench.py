"""Multi-seed benchmark harness, JSON-lines records and summary statistics.

Medians are order statistics: for ``N`` records the reported median is the
``ceil(N / 2)``-th smallest value (the lower median for even ``N``).
Unsuccessful runs count as infinite cost and sort after every real value;
a median that lands on infinity is reported as "no median solution".
Confidence intervals are the distribution-free binomial order-statistic
interval for the median at 99% two-sided coverage.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

from scipy.stats import binom

from .environment import (Environment, make_dividing_wall, make_free_space,
                          make_random_rectangles)
from .planner import Planner, PlannerConfig

RECORD_SCHEMA_VERSION = 1
SPEC_SCHEMA_VERSION = 1
CONFIDENCE = 0.99
BASELINE = "spherical"

PLANNERS = {"fdit": "elliptical", "spherical": "spherical"}


def _dividing_wall_closed(n: int) -> Environment:
    return make_dividing_wall(n, gap_spec=())


ENVIRONMENTS = {
    "dw": make_dividing_wall,
    "dw0": _dividing_wall_closed,
    "free": make_free_space,
    "rr": make_random_rectangles,
}


class BenchmarkError(ValueError):
    pass


def make_environment(env_id: str, dimension: int) -> Environment:
    """Build a registered environment, or load ``file:<path>``."""
    if env_id.startswith("file:"):
        env = Environment.load(env_id[5:])
        if env.dimension != dimension:
            raise BenchmarkError(f"{env_id} has dimension {env.dimension}, not {dimension}")
        return env
    try:
        factory = ENVIRONMENTS[env_id]
    except KeyError:
        raise BenchmarkError(f"unknown environment {env_id!r}") from None
    return factory(dimension)


# -- records ---------------------------------------------------------------

def _enc(x: float):
    return None if math.isinf(x) else x


def _dec(x) -> float:
    return math.inf if x is None else float(x)


@dataclass
class RunRecord:
    planner: str
    env: str
    dimension: int
    seed: int
    success: bool
    t_init: float = math.inf
    c_init: float = math.inf
    c_final: float = math.inf
    trace: list = field(default_factory=list)

    def __post_init__(self):
        if not self.success and not (math.isinf(self.t_init) and math.isinf(self.c_init)
                                     and math.isinf(self.c_final)):
            raise ValueError("unsuccessful runs must carry infinite t_init, c_init, c_final")
        costs = [c for _, c in self.trace]
        if any(b >= a for a, b in zip(costs, costs[1:])):
            raise ValueError("trace costs must be strictly decreasing")

    def to_json(self) -> str:
        row = {
            "schema": RECORD_SCHEMA_VERSION,
            "planner": self.planner,
            "env": self.env,
            "dimension": self.dimension,
            "seed": self.seed,
            "success": self.success,
            "t_init": _enc(self.t_init),
            "c_init": _enc(self.c_init),
            "c_final": _enc(self.c_final),
            "trace": [[t, c] for t, c in self.trace],
        }
        return json.dumps(row, separators=(",", ":"), allow_nan=False)

    @classmethod
    def from_json(cls, line: str) -> "RunRecord":
        row = json.loads(line)
        if row.get("schema") != RECORD_SCHEMA_VERSION:
            raise ValueError(f"unsupported record schema {row.get('schema')!r}")
        return cls(row["planner"], row["env"], int(row["dimension"]), int(row["seed"]),
                   bool(row["success"]), _dec(row["t_init"]), _dec(row["c_init"]),
                   _dec(row["c_final"]), [(float(t), float(c)) for t, c in row["trace"]])


def read_records(path) -> list:
    with open(path, encoding="utf-8") as fh:
        return [RunRecord.from_json(line) for line in fh if line.strip()]


def run_once(env_id: str, dimension: int, planner_id: str, seed: int, config: PlannerConfig,
             env: Environment | None = None, on_finish=None) -> RunRecord:
    """One seeded run. ``on_finish(planner)`` sees the finished planner, e.g. for path audits."""
    env = make_environment(env_id, dimension) if env is None else env
    cfg = replace(config, neighbor_mode=PLANNERS[planner_id], seed=seed)
    planner = Planner(env, cfg)
    trace = [(s.wall_time, s.cost) for s in planner.plan()]
    if on_finish is not None:
        on_finish(planner)
    if not trace:
        return RunRecord(planner_id, env_id, dimension, seed, False)
    return RunRecord(planner_id, env_id, dimension, seed, True,
                     trace[0][0], trace[0][1], trace[-1][1], trace)


# -- benchmark specs -------------------------------------------------------

@dataclass(frozen=True)
class Case:
    env: str
    dimension: int
    time_budget: float


@dataclass(frozen=True)
class BenchmarkSpec:
    """What to run: every planner on every case, ``runs`` seeds each."""

    cases: tuple
    planners: tuple = ("spherical", "fdit")
    runs: int = 100
    base_seed: int = 0
    batch_size: int = 200
    gamma_max: float = 1.0
    loop_cap: int = 5
    name: str = "benchmark"

    def validate(self) -> None:
        if self.runs < 1:
            raise BenchmarkError("runs must be >= 1")
        if not self.cases:
            raise BenchmarkError("no cases")
        for p in self.planners:
            if p not in PLANNERS:
                raise BenchmarkError(f"unknown planner {p!r}")
        for c in self.cases:
            if not c.env.startswith("file:") and c.env not in ENVIRONMENTS:
                raise BenchmarkError(f"unknown environment {c.env!r}")
            if c.dimension < 2:
                raise BenchmarkError("dimension must be >= 2")
            if not c.time_budget > 0:
                raise BenchmarkError("time budget must be > 0")

    def config(self, case: Case) -> PlannerConfig:
        return PlannerConfig(batch_size=self.batch_size, gamma_max=self.gamma_max,
                             loop_cap=self.loop_cap, time_budget=case.time_budget)

    def jobs(self) -> list:
        return [(case, planner, self.base_seed + i)
                for case in self.cases for planner in self.planners for i in range(self.runs)]

    def to_dict(self) -> dict:
        return {
            "schema": SPEC_SCHEMA_VERSION,
            "name": self.name,
            "cases": [{"env": c.env, "dim": c.dimension, "time_budget": c.time_budget} for c in self.cases],
            "planners": list(self.planners),
            "runs": self.runs,
            "base_seed": self.base_seed,
            "batch_size": self.batch_size,
            "gamma_max": self.gamma_max,
            "loop_cap": self.loop_cap,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "BenchmarkSpec":
        if d.get("schema") != SPEC_SCHEMA_VERSION:
            raise BenchmarkError(f"unsupported spec schema {d.get('schema')!r}")
        known = {"schema", "name", "cases", "planners", "runs", "base_seed", "batch_size",
                 "gamma_max", "loop_cap"}
        extra = set(d) - known
        if extra:
            raise BenchmarkError(f"unknown spec fields {sorted(extra)}")
        try:
            cases = tuple(Case(str(c["env"]), int(c["dim"]), float(c["time_budget"])) for c in d["cases"])
        except (KeyError, TypeError) as exc:
            raise BenchmarkError(f"malformed case list: {exc}") from None
        spec = cls(cases=cases, planners=tuple(d.get("planners", ("spherical", "fdit"))),
                   runs=int(d.get("runs", 100)), base_seed=int(d.get("base_seed", 0)),
                   batch_size=int(d.get("batch_size", 200)), gamma_max=float(d.get("gamma_max", 1.0)),
                   loop_cap=int(d.get("loop_cap", 5)), name=str(d.get("name", "benchmark")))
        spec.validate()
        return spec

    @classmethod
    def load(cls, path) -> "BenchmarkSpec":
        try:
            data = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise BenchmarkError(f"{path}: not valid JSON ({exc})") from None
        return cls.from_dict(data)

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")


def _run_job(args) -> RunRecord:
    case, planner, seed, config = args
    return run_once(case.env, case.dimension, planner, seed, config)


def run_benchmark(spec: BenchmarkSpec, out=None, workers: int = 1, progress=None) -> list:
    """Run every job of ``spec``; each record is written to ``out`` as soon as it is known.

    Output order is the job order regardless of ``workers``, so the file is
    identical for serial and parallel runs.
    """
    spec.validate()
    for case in spec.cases:
        make_environment(case.env, case.dimension)
    jobs = [(case, planner, seed, spec.config(case)) for case, planner, seed in spec.jobs()]
    fh = open(out, "w", encoding="utf-8") if isinstance(out, (str, Path)) else out
    records = []
    try:
        if workers > 1:
            from multiprocessing import Pool
            with Pool(workers) as pool:
                results = pool.imap(_run_job, jobs)
                for rec in results:
                    _emit(rec, fh, records, progress)
        else:
            for job in jobs:
                _emit(_run_job(job), fh, records, progress)
    finally:
        if fh is not None and fh is not out:
            fh.close()
    return records


def _emit(rec: RunRecord, fh, records: list, progress) -> None:
    records.append(rec)
    if fh is not None:
        fh.write(rec.to_json() + "\n")
        fh.flush()
    if progress is not None:
        progress(rec)


# -- statistics --------------------------------------------------------------

def median_rank(count: int) -> int:
    """Zero-based index of the reported median among ``count`` sorted values."""
    if count < 1:
        raise ValueError("median of an empty sample")
    return math.ceil(count / 2) - 1


def order_median(values: Sequence[float]) -> float:
    xs = sorted(values)
    return xs[median_rank(len(xs))]


def median_ci_ranks(count: int, confidence: float = CONFIDENCE) -> tuple:
    """Zero-based ranks ``(lo, hi)`` of the binomial order-statistic interval.

    ``lo`` is the largest rank with ``P(B <= lo) <= alpha / 2`` for
    ``B ~ Binomial(count, 1/2)`` and ``hi = count - 1 - lo``, giving coverage
    ``1 - 2 P(B <= lo) >= confidence``. When no rank qualifies (very small
    samples) the interval is the full sample range.
    """
    if count < 1:
        raise ValueError("interval of an empty sample")
    alpha = 1.0 - confidence
    lo = -1
    while binom.cdf(lo + 1, count, 0.5) <= alpha / 2:
        lo += 1
    lo = max(lo, 0)
    return lo, count - 1 - lo


def median_ci(values: Sequence[float], confidence: float = CONFIDENCE) -> tuple:
    xs = sorted(values)
    lo, hi = median_ci_ranks(len(xs), confidence)
    return xs[lo], xs[hi]


@dataclass
class PlannerSummary:
    planner: str
    runs: int
    success_rate: float
    t_init: float
    c_init: float
    c_final: float
    t_init_ci: tuple
    c_init_ci: tuple
    c_final_ci: tuple

    @property
    def has_median_solution(self) -> bool:
        return not math.isinf(self.c_init)


@dataclass
class SummaryStats:
    env: str
    dimension: int
    planners: dict
    improvement: dict
    baseline: str = BASELINE

    def table(self) -> str:
        head = f"{self.env}-R{self.dimension}"
        lines = [f"{head:<10} {'planner':<10} {'succ':>5} {'t_init':>9} {'c_init':>9} "
                 f"{'c_init 99% CI':>21} {'c_final':>9} {'impr %':>8}"]
        for name, s in self.planners.items():
            imp = self.improvement.get(name)
            imp_s = "-" if imp is None else f"{imp:.2f}"
            if s.has_median_solution:
                ci = f"[{_fmt(s.c_init_ci[0])}, {_fmt(s.c_init_ci[1])}]"
                lines.append(f"{'':<10} {name:<10} {s.success_rate:>5.2f} {_fmt(s.t_init):>9} "
                             f"{_fmt(s.c_init):>9} {ci:>21} {_fmt(s.c_final):>9} {imp_s:>8}")
            else:
                lines.append(f"{'':<10} {name:<10} {s.success_rate:>5.2f} no median solution")
        return "\n".join(lines)


def _fmt(x: float) -> str:
    return "inf" if math.isinf(x) else f"{x:.4f}"


def improvement_percent(baseline_median: float, variant_median: float) -> float | None:
    """Relative reduction of the baseline median; ``None`` if either is infinite."""
    if math.isinf(baseline_median) or math.isinf(variant_median):
        return None
    return (baseline_median - variant_median) / baseline_median * 100.0


def summarize_planner(records: Sequence[RunRecord]) -> PlannerSummary:
    if not records:
        raise ValueError("no records")
    t = [r.t_init for r in records]
    ci = [r.c_init for r in records]
    cf = [r.c_final for r in records]
    return PlannerSummary(records[0].planner, len(records),
                          sum(r.success for r in records) / len(records),
                          order_median(t), order_median(ci), order_median(cf),
                          median_ci(t), median_ci(ci), median_ci(cf))


def summarize(records: Iterable[RunRecord], baseline: str = BASELINE) -> list:
    """One :class:`SummaryStats` per (environment, dimension), in first-seen order."""
    records = list(records)
    if not records:
        raise ValueError("no records to summarize")
    groups: dict = {}
    for r in records:
        groups.setdefault((r.env, r.dimension), {}).setdefault(r.planner, []).append(r)
    out = []
    for (env, dim), by_planner in groups.items():
        planners = {name: summarize_planner(rs) for name, rs in sorted(by_planner.items())}
        improvement = {}
        if baseline in planners:
            base = planners[baseline].c_init
            for name, s in planners.items():
                if name != baseline:
                    improvement[name] = improvement_percent(base, s.c_init)
        out.append(SummaryStats(env, dim, planners, improvement, baseline))
    out.sort(key=lambda s: (s.env, s.dimension))
    return out
