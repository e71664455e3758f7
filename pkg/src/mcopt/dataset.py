"""Offline objective tables: CSV ingestion, synthetic generation, lookups.

A complete table maps every (workload, point) cell of a search space to one
runtime measurement and one derived cost, so any optimizer query during a
simulated search can be answered from the table instead of a live cluster.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import (
    CompletenessError,
    DomainError,
    DuplicateError,
    ParseError,
    ValueRangeError,
)
from .space import (
    ConfigPoint,
    SearchSpace,
    assignment_string,
    enumerate_all,
    parse_assignment,
    point_to_string,
)
from .util import atomic_write_text, fmt_float

DATASET_HEADER = ["workload", "provider", "config", "nodes", "runtime_s", "cost_usd"]
PRICE_HEADER = ["provider", "config", "price_per_hour"]


class Target(enum.Enum):
    """Which scalar the optimizer minimizes."""

    TIME = "time"
    COST = "cost"

    @classmethod
    def parse(cls, text: str) -> "Target":
        try:
            return cls(text.strip().lower())
        except ValueError:
            raise DomainError(f"unknown target {text!r}; expected 'time' or 'cost'") from None


@dataclass(frozen=True)
class PriceList:
    """Price per node-hour for every (provider, assignment) of a space."""

    space: SearchSpace
    prices: dict

    def __post_init__(self):
        for k, prov in enumerate(self.space.providers):
            for assignment in prov.assignments():
                key = (k, tuple(assignment))
                if key not in self.prices:
                    raise DomainError(f"price list missing {prov.name}/{';'.join(assignment)}")
                if not (self.prices[key] > 0 and math.isfinite(self.prices[key])):
                    raise ValueRangeError(f"non-positive price for {prov.name}/{';'.join(assignment)}")

    def price(self, point: ConfigPoint) -> float:
        return self.prices[(point.provider, point.assignment)]


class ObjectiveTable:
    """Immutable complete lookup (workload, point) -> (runtime_s, cost_usd)."""

    def __init__(self, space: SearchSpace, workloads, entries):
        self.space = space
        self.workloads = list(workloads)
        self._entries = dict(entries)
        self._points = enumerate_all(space)
        self._validate()

    def _validate(self):
        if not self.workloads:
            raise DomainError("table must contain at least one workload")
        if len(set(self.workloads)) != len(self.workloads):
            raise DuplicateError(f"duplicate workload identifiers in {self.workloads}")
        expected = {(w, p) for w in self.workloads for p in self._points}
        got = set(self._entries)
        missing = expected - got
        if missing:
            w, p = sorted(missing, key=lambda cell: (cell[0], self._points.index(cell[1])))[0]
            raise CompletenessError(
                f"table incomplete: {len(missing)} missing cells, first is "
                f"workload {w!r} point {point_to_string(self.space, p)}"
            )
        extra = got - expected
        if extra:
            w, p = next(iter(extra))
            raise DomainError(f"table contains cell outside the space: workload {w!r}, {p}")
        for (w, p), (runtime_s, cost_usd) in self._entries.items():
            for label, value in (("runtime_s", runtime_s), ("cost_usd", cost_usd)):
                if not (value > 0 and math.isfinite(value)):
                    raise ValueRangeError(
                        f"{label} must be positive and finite, got {value!r} for "
                        f"workload {w!r} point {point_to_string(self.space, p)}"
                    )

    @property
    def points(self) -> list[ConfigPoint]:
        return list(self._points)

    def cell(self, workload: str, point: ConfigPoint) -> tuple[float, float]:
        try:
            return self._entries[(workload, point)]
        except KeyError:
            raise DomainError(f"no entry for workload {workload!r} point {point}") from None

    def values(self, workload: str, target: Target) -> np.ndarray:
        """All values for one workload/target, in canonical point order."""
        return np.array([lookup(self, workload, p, target) for p in self._points])

    def __eq__(self, other):
        return (
            isinstance(other, ObjectiveTable)
            and self.space == other.space
            and self.workloads == other.workloads
            and self._entries == other._entries
        )


def lookup(table: ObjectiveTable, workload: str, point: ConfigPoint, target: Target) -> float:
    """Deterministic table read: runtime seconds or cost dollars."""
    if workload not in table.workloads:
        raise DomainError(f"unknown workload {workload!r}; table has {table.workloads}")
    runtime_s, cost_usd = table.cell(workload, point)
    return runtime_s if target is Target.TIME else cost_usd


def derive_cost(runtime_s: float, price_per_hour: float, nodes: int) -> float:
    """Cost of a run: runtime (hours) x hourly node price x node count."""
    for label, value in (("runtime_s", runtime_s), ("price_per_hour", price_per_hour), ("nodes", nodes)):
        if not (value > 0 and math.isfinite(value)):
            raise DomainError(f"{label} must be positive, got {value!r}")
    return runtime_s / 3600.0 * price_per_hour * nodes


def load_csv(space: SearchSpace, path) -> ObjectiveTable:
    """Read a dataset CSV and validate it into a complete table.

    Partial tables are rejected: the replay methodology requires that any
    query an algorithm can make is answerable.
    """
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        if header != DATASET_HEADER:
            raise ParseError(f"{path}: bad header {header}, expected {DATASET_HEADER}")
        workloads: list[str] = []
        entries = {}
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(DATASET_HEADER):
                raise ParseError(f"{path}:{lineno}: expected {len(DATASET_HEADER)} fields, got {len(row)}")
            workload, provider, config, nodes_text, runtime_text, cost_text = row
            k = space.provider_index(provider)
            try:
                nodes = int(nodes_text)
                runtime_s = float(runtime_text)
                cost_usd = float(cost_text)
            except ValueError as e:
                raise ParseError(f"{path}:{lineno}: {e}") from e
            point = ConfigPoint(provider=k, nodes=nodes, assignment=parse_assignment(space, k, config))
            if nodes not in space.node_counts:
                raise DomainError(f"{path}:{lineno}: node count {nodes} not in {space.node_counts}")
            for label, value in (("runtime_s", runtime_s), ("cost_usd", cost_usd)):
                if not (value > 0 and math.isfinite(value)):
                    raise ValueRangeError(f"{path}:{lineno}: {label} must be positive, got {value}")
            if workload not in workloads:
                workloads.append(workload)
            if (workload, point) in entries:
                raise DuplicateError(
                    f"{path}:{lineno}: duplicate cell workload {workload!r} "
                    f"point {point_to_string(space, point)}"
                )
            entries[(workload, point)] = (runtime_s, cost_usd)
    return ObjectiveTable(space, workloads, entries)


def write_csv(table: ObjectiveTable, path) -> None:
    """Inverse of load_csv; canonical row order makes output reproducible."""
    lines = [",".join(DATASET_HEADER)]
    for w in table.workloads:
        for p in table.points:
            runtime_s, cost_usd = table.cell(w, p)
            lines.append(
                ",".join(
                    [
                        w,
                        table.space.providers[p.provider].name,
                        assignment_string(table.space, p),
                        str(p.nodes),
                        fmt_float(runtime_s),
                        fmt_float(cost_usd),
                    ]
                )
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


def write_price_csv(prices: PriceList, path) -> None:
    lines = [",".join(PRICE_HEADER)]
    for k, prov in enumerate(prices.space.providers):
        for assignment in prov.assignments():
            point = ConfigPoint(provider=k, nodes=prices.space.node_counts[0], assignment=tuple(assignment))
            lines.append(
                ",".join([prov.name, assignment_string(prices.space, point), fmt_float(prices.price(point))])
            )
    atomic_write_text(path, "\n".join(lines) + "\n")


@dataclass(frozen=True)
class Scenario:
    """Synthetic-generator regime.

    neutral       -- independent runtime laws per (workload, provider, config)
                     with mild multiplicative noise.
    dominant      -- like neutral, but one provider's runtimes are scaled by
                     ``factor`` (< 1 makes it strictly best across the table).
    ernest_exact  -- noise disabled, so runtimes across node counts follow the
                     size law exactly (intercept, 1/n, log n, n terms).
    """

    kind: str
    provider: int | None = None
    factor: float | None = None

    KINDS = ("neutral", "dominant", "ernest_exact")

    def __post_init__(self):
        if self.kind not in self.KINDS:
            raise DomainError(f"unknown scenario {self.kind!r}; expected one of {self.KINDS}")
        if self.kind == "dominant":
            if self.provider is None or self.provider < 0:
                raise DomainError("dominant scenario needs a provider index >= 0")
            if self.factor is None or not (self.factor > 0 and math.isfinite(self.factor)):
                raise DomainError("dominant scenario needs a positive finite factor")
        elif self.provider is not None or self.factor is not None:
            raise DomainError(f"scenario {self.kind!r} takes no parameters")

    @classmethod
    def neutral(cls) -> "Scenario":
        return cls("neutral")

    @classmethod
    def dominant(cls, provider: int, factor: float) -> "Scenario":
        return cls("dominant", provider=provider, factor=factor)

    @classmethod
    def ernest_exact(cls) -> "Scenario":
        return cls("ernest_exact")

    @classmethod
    def parse(cls, text: str) -> "Scenario":
        parts = text.strip().split(":")
        kind = parts[0]
        if kind == "dominant":
            if len(parts) != 3:
                raise DomainError(f"dominant scenario must be 'dominant:<provider>:<factor>', got {text!r}")
            try:
                return cls.dominant(int(parts[1]), float(parts[2]))
            except ValueError as e:
                raise DomainError(f"bad dominant parameters in {text!r}: {e}") from e
        if len(parts) != 1:
            raise DomainError(f"scenario {kind!r} takes no parameters, got {text!r}")
        return cls(kind)

    def __str__(self):
        if self.kind == "dominant":
            return f"dominant:{self.provider}:{self.factor}"
        return self.kind


# Coefficient ranges keep the spread of base runtimes well under 10x so a
# dominant factor of 0.1 beats every other provider's runtime by full scan.
_THETA_RANGES = ((50.0, 100.0), (20.0, 60.0), (5.0, 15.0), (1.0, 4.0))
_NOISE_SIGMA = 0.05
_PRICE_RANGE = (0.10, 0.60)


def size_law(theta, n: int) -> float:
    """Runtime model in cluster size: t0 + t1/n + t2*log(n) + t3*n."""
    t0, t1, t2, t3 = theta
    return t0 + t1 / n + t2 * math.log(n) + t3 * n


def generate_synthetic(
    space: SearchSpace,
    n_workloads: int,
    seed: int,
    scenario: Scenario | str = "neutral",
) -> tuple[ObjectiveTable, PriceList]:
    """Generate a complete table plus price list, deterministically from seed."""
    if isinstance(scenario, str):
        scenario = Scenario.parse(scenario)
    if n_workloads < 1:
        raise DomainError(f"n_workloads must be >= 1, got {n_workloads}")
    if scenario.kind == "dominant" and scenario.provider >= space.n_providers:
        raise DomainError(
            f"dominant provider index {scenario.provider} out of range for {space.n_providers} providers"
        )
    rng = np.random.default_rng(seed)
    prices = {}
    for k, prov in enumerate(space.providers):
        for assignment in prov.assignments():
            prices[(k, tuple(assignment))] = float(rng.uniform(*_PRICE_RANGE))
    price_list = PriceList(space=space, prices=prices)

    workloads = [f"w{i}" for i in range(n_workloads)]
    sigma = 0.0 if scenario.kind == "ernest_exact" else _NOISE_SIGMA
    entries = {}
    for w in workloads:
        for k, prov in enumerate(space.providers):
            scale = (
                scenario.factor
                if scenario.kind == "dominant" and k == scenario.provider
                else 1.0
            )
            for assignment in prov.assignments():
                theta = [float(rng.uniform(lo, hi)) for lo, hi in _THETA_RANGES]
                for n in space.node_counts:
                    noise = math.exp(sigma * float(rng.standard_normal())) if sigma else 1.0
                    runtime_s = size_law(theta, n) * noise * scale
                    point = ConfigPoint(provider=k, nodes=n, assignment=tuple(assignment))
                    cost_usd = derive_cost(runtime_s, price_list.price(point), n)
                    entries[(w, point)] = (runtime_s, cost_usd)
    return ObjectiveTable(space, workloads, entries), price_list
