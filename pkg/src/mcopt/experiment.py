"""Benchmark harness: seeded sweeps, regret and savings records, reports.

Every (workload, algorithm, target, budget, repetition) cell runs with a
seed derived from the plan seed and the cell coordinates, so results are
identical no matter how cells are scheduled across workers.
"""

from __future__ import annotations

import csv
import io
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .bbo import BboKind
from .dataset import ObjectiveTable, Target, lookup
from .errors import DomainError, IntegrityError, McoptError
from .multicloud import (
    MultiCloudResult,
    cb_b1_for_budget,
    cloudbandit,
    flattened_optimize,
    independent_optimize,
    linear_predictor_result,
)
from .space import ConfigPoint
from .svg import box_chart, line_chart
from .util import atomic_write_text, fmt_float, stable_seed

DEFAULT_SEED = 1729
DEFAULT_PRODUCTION_RUNS = 64

REGRET_HEADER = ["workload", "algorithm", "target", "budget", "seed", "found", "fstar", "regret"]
SAVINGS_HEADER = ["workload", "algorithm", "target", "budget", "N", "C_opt", "R_opt", "R_rand", "S"]


# ---------------------------------------------------------------------------
# Core metrics


def true_minimum(table: ObjectiveTable, workload: str, target: Target) -> tuple[ConfigPoint, float]:
    """Exhaustive scan; first point in canonical order wins ties."""
    best_point, best_value = None, None
    for p in table.points:
        v = lookup(table, workload, p, target)
        if best_value is None or v < best_value:
            best_point, best_value = p, v
    return best_point, best_value


def regret(found: float, fstar: float) -> float:
    """Relative gap to the true minimum: (found - fstar) / fstar."""
    if not fstar > 0:
        raise DomainError(f"true minimum must be positive, got {fstar}")
    if found < fstar:
        raise IntegrityError(
            f"found value {found} below the true minimum {fstar}; lookup or scan is broken"
        )
    return (found - fstar) / fstar


def expected_rs_regret(table: ObjectiveTable, workload: str, target: Target, budget: int) -> float:
    """Exact expected regret of uniform with-replacement random search.

    For sorted values v_(1) <= ... <= v_(M), the minimum of B draws equals
    v_(i) with probability ((M-i+1)/M)^B - ((M-i)/M)^B.
    """
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    values = np.sort(table.values(workload, target))
    M = len(values)
    i = np.arange(1, M + 1)
    prob = ((M - i + 1) / M) ** budget - ((M - i) / M) ** budget
    # the dot product can land a ulp below v_min once prob concentrates there
    expected_min = max(float(values @ prob), float(values[0]))
    return regret(expected_min, float(values[0]))


# ---------------------------------------------------------------------------
# Records and algorithm descriptors


@dataclass(frozen=True)
class RegretRecord:
    workload: str
    algorithm: str
    target: Target
    budget: int
    seed: int
    found: float
    fstar: float
    regret: float


@dataclass(frozen=True)
class SavingsRecord:
    workload: str
    algorithm: str
    target: Target
    budget: int
    n_production: int
    c_opt: float
    r_opt: float
    r_rand: float
    savings: float


def savings_fraction(c_opt: float, r_opt: float, r_rand: float, n_production: int) -> float:
    """Net fractional saving of searching once then running N production jobs,
    versus running the same N jobs on a uniformly random configuration."""
    if not r_rand > 0:
        raise DomainError(f"random-baseline expense must be positive, got {r_rand}")
    if n_production < 1:
        raise DomainError(f"production run count must be >= 1, got {n_production}")
    total_rand = n_production * r_rand
    return (total_rand - (c_opt + n_production * r_opt)) / total_rand


_META_KINDS = ("rs", "exhaustive", "linear-pred", "flat", "indep", "cb")


@dataclass(frozen=True)
class AlgorithmSpec:
    """One algorithm of the comparison matrix, e.g. ``cb:rbfopt``.

    meta is the multi-cloud strategy; component the engine it drives (only
    flat/indep/cb take one).  ``exhaustive`` always scans the full space
    regardless of the cell budget; ``rs`` is flattened random search.
    """

    meta: str
    component: BboKind | None = None

    def __post_init__(self):
        if self.meta not in _META_KINDS:
            raise DomainError(f"unknown algorithm {self.meta!r}; expected one of {_META_KINDS}")
        if self.meta in ("flat", "indep", "cb"):
            if self.component is None:
                raise DomainError(f"algorithm {self.meta!r} needs a component engine, e.g. {self.meta}:cherrypick")
        elif self.component is not None:
            raise DomainError(f"algorithm {self.meta!r} does not take a component engine")

    @property
    def label(self) -> str:
        return self.meta if self.component is None else f"{self.meta}:{self.component.value}"

    @classmethod
    def parse(cls, text: str) -> "AlgorithmSpec":
        head, sep, rest = text.strip().partition(":")
        meta = {"cloudbandit": "cb", "flattened": "flat", "independent": "indep"}.get(head, head)
        component = BboKind.parse(rest) if sep else None
        return cls(meta=meta, component=component)

    def execute(
        self,
        table: ObjectiveTable,
        workload: str,
        target: Target,
        budget: int,
        seed: int,
        eta: float = 2.0,
    ) -> MultiCloudResult:
        def objective(p):
            return lookup(table, workload, p, target)

        space = table.space
        if self.meta == "rs":
            return flattened_optimize(space, objective, BboKind.RANDOM_SEARCH, budget, seed)
        if self.meta == "exhaustive":
            return flattened_optimize(space, objective, BboKind.EXHAUSTIVE, space.size(), seed)
        if self.meta == "linear-pred":
            return linear_predictor_result(table, workload, target)
        if self.meta == "flat":
            return flattened_optimize(space, objective, self.component, budget, seed)
        if self.meta == "indep":
            return independent_optimize(space, objective, self.component, budget, seed)
        b1 = cb_b1_for_budget(space.n_providers, eta, budget)
        return cloudbandit(space, objective, self.component, b1, eta, seed)


@dataclass(frozen=True)
class ExperimentPlan:
    table: ObjectiveTable
    algorithms: tuple[AlgorithmSpec, ...]
    targets: tuple[Target, ...]
    budgets: tuple[int, ...]
    seeds: int
    n_production: int = DEFAULT_PRODUCTION_RUNS
    base_seed: int = DEFAULT_SEED
    eta: float = 2.0
    workloads: tuple[str, ...] = field(default=())

    def __post_init__(self):
        if not self.algorithms:
            raise DomainError("plan needs at least one algorithm")
        if not self.targets:
            raise DomainError("plan needs at least one target")
        if not self.budgets:
            raise DomainError("plan needs at least one budget")
        if any(b2 <= b1 for b1, b2 in zip(self.budgets, self.budgets[1:])):
            raise DomainError(f"budgets must be strictly ascending, got {self.budgets}")
        if self.seeds < 1:
            raise DomainError(f"seed count must be >= 1, got {self.seeds}")
        if not self.workloads:
            object.__setattr__(self, "workloads", tuple(self.table.workloads))
        for w in self.workloads:
            if w not in self.table.workloads:
                raise DomainError(f"workload {w!r} not in the dataset")


def _run_group(args) -> tuple[list[RegretRecord], SavingsRecord]:
    """All repetitions of one (workload, algorithm, target, budget) cell group."""
    plan, workload, algo, target, budget = args
    table = plan.table
    _, fstar = true_minimum(table, workload, target)
    r_rand = float(np.mean(table.values(workload, target)))
    regrets: list[RegretRecord] = []
    c_opts, r_opts = [], []
    for rep in range(plan.seeds):
        cell = (workload, algo.label, target.value, budget, rep)
        cell_seed = stable_seed(plan.base_seed, *cell)
        try:
            result = algo.execute(table, workload, target, budget, cell_seed, eta=plan.eta)
        except McoptError as e:
            raise McoptError(f"cell {cell} failed: {e}") from e
        regrets.append(
            RegretRecord(
                workload=workload,
                algorithm=algo.label,
                target=target,
                budget=budget,
                seed=rep,
                found=result.loss,
                fstar=fstar,
                regret=regret(result.loss, fstar),
            )
        )
        c_opts.append(result.search_expense)
        r_opts.append(result.loss)
    c_opt = float(np.mean(c_opts))
    r_opt = float(np.mean(r_opts))
    savings = SavingsRecord(
        workload=workload,
        algorithm=algo.label,
        target=target,
        budget=budget,
        n_production=plan.n_production,
        c_opt=c_opt,
        r_opt=r_opt,
        r_rand=r_rand,
        savings=savings_fraction(c_opt, r_opt, r_rand, plan.n_production),
    )
    return regrets, savings


def run_plan(plan: ExperimentPlan, jobs: int = 1) -> tuple[list[RegretRecord], list[SavingsRecord]]:
    """Execute every cell of the plan; output order is schedule-independent."""
    groups = [
        (plan, w, algo, target, budget)
        for w in plan.workloads
        for algo in plan.algorithms
        for target in plan.targets
        for budget in plan.budgets
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_group, groups))
    else:
        results = [_run_group(g) for g in groups]
    regret_records = [r for regrets, _ in results for r in regrets]
    savings_records = [s for _, s in results]
    regret_records.sort(key=lambda r: (r.workload, r.algorithm, r.target.value, r.budget, r.seed))
    savings_records.sort(key=lambda s: (s.workload, s.algorithm, s.target.value, s.budget))
    return regret_records, savings_records


# ---------------------------------------------------------------------------
# Aggregation


@dataclass(frozen=True)
class BoxStats:
    median: float
    q25: float
    q75: float
    whisker_low: float
    whisker_high: float


def box_stats(values) -> BoxStats:
    """Quartiles by linear interpolation; whiskers at the furthest datum
    within 1.5 IQR of the box (so they always land on actual data)."""
    arr = np.sort(np.asarray(list(values), dtype=float))
    if arr.size == 0:
        raise DomainError("box statistics need at least one value")
    q25, median, q75 = (float(q) for q in np.percentile(arr, [25.0, 50.0, 75.0]))
    iqr = q75 - q25
    whisker_low = float(arr[arr >= q25 - 1.5 * iqr].min())
    whisker_high = float(arr[arr <= q75 + 1.5 * iqr].max())
    return BoxStats(median=median, q25=q25, q75=q75, whisker_low=whisker_low, whisker_high=whisker_high)


@dataclass(frozen=True)
class GroupStats:
    count: int
    mean: float
    box: BoxStats


def aggregate(records, group_by: tuple[str, ...], value_field: str) -> dict[tuple, GroupStats]:
    """Group records by attribute names and summarize one numeric field."""
    buckets: dict[tuple, list[float]] = {}
    for rec in records:
        key = tuple(getattr(rec, name) for name in group_by)
        buckets.setdefault(key, []).append(float(getattr(rec, value_field)))
    out = {}
    for key in sorted(buckets, key=lambda k: tuple(str(part) for part in k)):
        vals = buckets[key]
        out[key] = GroupStats(count=len(vals), mean=float(np.mean(vals)), box=box_stats(vals))
    return out


# ---------------------------------------------------------------------------
# CSV and chart emission


def regret_records_to_csv(records) -> str:
    buf = io.StringIO()
    buf.write(",".join(REGRET_HEADER) + "\n")
    for r in records:
        buf.write(
            ",".join(
                [
                    r.workload,
                    r.algorithm,
                    r.target.value,
                    str(r.budget),
                    str(r.seed),
                    fmt_float(r.found),
                    fmt_float(r.fstar),
                    fmt_float(r.regret),
                ]
            )
            + "\n"
        )
    return buf.getvalue()


def savings_records_to_csv(records) -> str:
    buf = io.StringIO()
    buf.write(",".join(SAVINGS_HEADER) + "\n")
    for s in records:
        buf.write(
            ",".join(
                [
                    s.workload,
                    s.algorithm,
                    s.target.value,
                    str(s.budget),
                    str(s.n_production),
                    fmt_float(s.c_opt),
                    fmt_float(s.r_opt),
                    fmt_float(s.r_rand),
                    fmt_float(s.savings),
                ]
            )
            + "\n"
        )
    return buf.getvalue()


def read_regret_csv(path) -> list[RegretRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [
            RegretRecord(
                workload=row["workload"],
                algorithm=row["algorithm"],
                target=Target.parse(row["target"]),
                budget=int(row["budget"]),
                seed=int(row["seed"]),
                found=float(row["found"]),
                fstar=float(row["fstar"]),
                regret=float(row["regret"]),
            )
            for row in reader
        ]


def read_savings_csv(path) -> list[SavingsRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        return [
            SavingsRecord(
                workload=row["workload"],
                algorithm=row["algorithm"],
                target=Target.parse(row["target"]),
                budget=int(row["budget"]),
                n_production=int(row["N"]),
                c_opt=float(row["C_opt"]),
                r_opt=float(row["R_opt"]),
                r_rand=float(row["R_rand"]),
                savings=float(row["S"]),
            )
            for row in reader
        ]


def _algorithm_order(records) -> list[str]:
    seen: list[str] = []
    for r in records:
        if r.algorithm not in seen:
            seen.append(r.algorithm)
    return sorted(seen)


def emit_report(regret_records, savings_records, out_dir) -> list[str]:
    """Write regret.csv / savings.csv plus per-target SVG charts.

    Identical records produce byte-identical files.  Returns written paths.
    """
    from pathlib import Path

    if not regret_records:
        raise DomainError("cannot emit a report from zero records")
    out_dir = Path(out_dir)
    written = []

    def emit(name: str, text: str):
        atomic_write_text(out_dir / name, text)
        written.append(str(out_dir / name))

    emit("regret.csv", regret_records_to_csv(regret_records))
    emit("savings.csv", savings_records_to_csv(savings_records))

    by_budget = aggregate(regret_records, ("target", "algorithm", "budget"), "regret")
    for target in sorted({r.target for r in regret_records}, key=lambda t: t.value):
        series = {}
        for algo in _algorithm_order([r for r in regret_records if r.target is target]):
            pts = sorted(
                (key[2], stats.mean)
                for key, stats in by_budget.items()
                if key[0] is target and key[1] == algo
            )
            series[algo] = pts
        emit(
            f"regret_{target.value}.svg",
            line_chart(
                series,
                title=f"mean regret vs budget ({target.value})",
                xlabel="search budget",
                ylabel="mean regret",
            ),
        )

    for target in sorted({s.target for s in savings_records}, key=lambda t: t.value):
        rows = [s for s in savings_records if s.target is target]
        boxes = {}
        for algo in _algorithm_order(rows):
            vals = [s.savings for s in rows if s.algorithm == algo]
            b = box_stats(vals)
            outliers = [v for v in vals if v < b.whisker_low or v > b.whisker_high]
            boxes[algo] = (b.whisker_low, b.q25, b.median, b.q75, b.whisker_high, sorted(outliers))
        emit(
            f"savings_{target.value}.svg",
            box_chart(boxes, title=f"savings by algorithm ({target.value})", ylabel="savings fraction"),
        )
    return written


def summary_table(regret_records) -> str:
    """Mean regret per algorithm and budget, one block per target."""
    stats = aggregate(regret_records, ("target", "algorithm", "budget"), "regret")
    lines = []
    targets = sorted({r.target for r in regret_records}, key=lambda t: t.value)
    budgets = sorted({r.budget for r in regret_records})
    for target in targets:
        lines.append(f"target={target.value}")
        header = f"{'algorithm':<24}" + "".join(f"{'B=' + str(b):>12}" for b in budgets)
        lines.append(header)
        for algo in _algorithm_order([r for r in regret_records if r.target is target]):
            cells = []
            for b in budgets:
                entry = stats.get((target, algo, b))
                cells.append(f"{entry.mean:>12.4f}" if entry else f"{'-':>12}")
            lines.append(f"{algo:<24}" + "".join(cells))
        lines.append("")
    return "\n".join(lines)
