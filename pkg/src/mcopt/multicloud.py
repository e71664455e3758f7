"""Meta-algorithms that pick a provider and its node configuration.

Three search strategies over the hierarchical domain:

* flattened_optimize  -- one optimizer instance over every provider's points.
* independent_optimize -- one optimizer per provider, equal budget split.
* cloudbandit         -- successive elimination: providers are bandit arms,
  one pull advances that provider's optimizer by one evaluation, per-round
  pull counts grow geometrically, and after each round the worst arm by
  best-loss-so-far is dropped until a single provider survives.

Plus a predictive baseline (linear_predict_loo) that ranks every point by a
leave-one-out linear model in the cluster size.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bbo import (
    DEFAULT_INIT_DESIGN,
    BboKind,
    CandidateSet,
    SearchTrace,
    bbo_new,
    run_bbo,
)
from .dataset import ObjectiveTable, Target, lookup
from .errors import BudgetError, DomainError, ObjectiveError, Saturated
from .space import ConfigPoint, SearchSpace, assignment_string, enumerate_all
from .util import stable_seed


@dataclass(frozen=True)
class ArmReport:
    """Final state of one arm; provider None marks the flattened joint arm."""

    provider: int | None
    pulls: int
    best_point: ConfigPoint | None
    best_value: float | None
    eliminated_round: int | None
    saturated: bool
    trace: SearchTrace


@dataclass(frozen=True)
class MultiCloudResult:
    space: SearchSpace
    chosen_point: ConfigPoint
    loss: float
    arms: tuple[ArmReport, ...]
    total_evals: int
    search_expense: float
    planned_evals: int | None = None  # set when a fixed schedule could under-spend

    def to_json_dict(self) -> dict:
        def arm_entry(arm: ArmReport) -> dict:
            name = self.space.providers[arm.provider].name if arm.provider is not None else "all"
            return {
                "provider": name,
                "pulls": arm.pulls,
                "best_value": arm.best_value,
                "eliminated_round": arm.eliminated_round,
            }

        return {
            "chosen_provider": self.space.providers[self.chosen_point.provider].name,
            "chosen_config": assignment_string(self.space, self.chosen_point),
            "chosen_nodes": self.chosen_point.nodes,
            "loss": self.loss,
            "total_evals": self.total_evals,
            "search_expense": self.search_expense,
            "arms": [arm_entry(a) for a in self.arms],
        }


def _result_from_arms(space, arms, chosen_point, loss, planned=None) -> MultiCloudResult:
    return MultiCloudResult(
        space=space,
        chosen_point=chosen_point,
        loss=loss,
        arms=tuple(arms),
        total_evals=sum(len(a.trace) for a in arms),
        search_expense=sum(a.trace.total_expense for a in arms),
        planned_evals=planned,
    )


def flattened_optimize(
    space: SearchSpace,
    objective,
    kind: BboKind,
    budget: int,
    seed: int,
    init_design: int = DEFAULT_INIT_DESIGN,
) -> MultiCloudResult:
    """Run one optimizer over the union of every provider's candidates."""
    candidates = CandidateSet.spanning(space)
    trace = run_bbo(kind, candidates, objective, budget, seed, min(init_design, len(candidates)))
    arm = ArmReport(
        provider=None,
        pulls=len(trace),
        best_point=trace.best_point,
        best_value=trace.best_value,
        eliminated_round=None,
        saturated=len(trace) < budget,
        trace=trace,
    )
    return _result_from_arms(space, [arm], trace.best_point, trace.best_value)


def independent_optimize(
    space: SearchSpace,
    objective,
    kind: BboKind,
    budget: int,
    seed: int,
    init_design: int = DEFAULT_INIT_DESIGN,
) -> MultiCloudResult:
    """Run one optimizer per provider with the budget split as evenly as
    possible (remainder goes to the earliest-declared providers)."""
    K = space.n_providers
    if budget < K:
        raise BudgetError(f"budget {budget} cannot cover {K} providers with >= 1 evaluation each")
    q, r = divmod(budget, K)
    arms = []
    for k in range(K):
        candidates = CandidateSet.for_provider(space, k)
        trace = run_bbo(
            kind,
            candidates,
            objective,
            q + 1 if k < r else q,
            stable_seed(seed, k),
            min(init_design, len(candidates)),
        )
        arms.append(
            ArmReport(
                provider=k,
                pulls=len(trace),
                best_point=trace.best_point,
                best_value=trace.best_value,
                eliminated_round=None,
                saturated=len(trace) < (q + 1 if k < r else q),
                trace=trace,
            )
        )
    winner = min(arms, key=lambda a: (a.best_value, a.provider))
    return _result_from_arms(space, arms, winner.best_point, winner.best_value, planned=budget)


# ---------------------------------------------------------------------------
# CloudBandit


@dataclass(frozen=True)
class BudgetSchedule:
    """Geometric pull schedule: round m grants b1 * eta^(m-1) pulls per arm."""

    b1: int
    eta: float
    rounds: int

    def __post_init__(self):
        if self.rounds < 1:
            raise DomainError(f"need >= 1 rounds, got {self.rounds}")
        if self.b1 < 1:
            raise DomainError(f"initial budget must be >= 1, got {self.b1}")
        if not self.eta > 1:
            raise DomainError(f"growth factor must be > 1, got {self.eta}")
        self.round_budgets()  # integrality check happens eagerly

    def round_budgets(self) -> list[int]:
        out = []
        for m in range(1, self.rounds + 1):
            exact = self.b1 * self.eta ** (m - 1)
            rounded = round(exact)
            if abs(exact - rounded) > 1e-9:
                raise DomainError(
                    f"round {m} budget {exact} is not an integer; pick b1/eta so every "
                    f"per-round budget is a whole number of evaluations"
                )
            out.append(int(rounded))
        return out

    def total(self) -> int:
        """Evaluations of a full run: one arm is dropped after each round."""
        return sum((self.rounds - m) * b for m, b in enumerate(self.round_budgets()))


def round_budgets(K: int, b1: int, eta: float) -> list[int]:
    """Per-round pull counts b1 * eta^(m-1); every entry must be integral."""
    return BudgetSchedule(b1=b1, eta=eta, rounds=K).round_budgets()


def cb_total_budget(K: int, b1: int, eta: float) -> int:
    """Total evaluations of a full elimination schedule:
    sum over rounds m of (K - m + 1) * b1 * eta^(m-1)."""
    return BudgetSchedule(b1=b1, eta=eta, rounds=K).total()


def cb_b1_for_budget(K: int, eta: float, budget: int) -> int:
    """Largest b1 whose schedule total fits within budget (never over-spends)."""
    floor_total = cb_total_budget(K, 1, eta)
    if budget < floor_total:
        raise BudgetError(
            f"budget {budget} below the minimum schedule total {floor_total} for K={K}, eta={eta}"
        )
    weight = sum((K - m + 1) * eta ** (m - 1) for m in range(1, K + 1))
    for b1 in range(int(budget // weight), 0, -1):
        try:
            if cb_total_budget(K, b1, eta) <= budget:
                return b1
        except DomainError:
            continue  # non-integral per-round budget for this b1
    raise BudgetError(f"no feasible b1 for budget {budget} with K={K}, eta={eta}")


class _Arm:
    """Mutable per-provider state while the bandit runs."""

    def __init__(self, space, provider, kind, seed, init_design):
        candidates = CandidateSet.for_provider(space, provider)
        self.provider = provider
        self.optimizer = bbo_new(
            kind, candidates, stable_seed(seed, provider), min(init_design, len(candidates))
        )
        self.saturated = False
        self.eliminated_round = None

    def advance(self, pulls: int, objective) -> None:
        for _ in range(pulls):
            if self.saturated:
                return
            try:
                point = self.optimizer.suggest()
            except Saturated:
                self.saturated = True
                return
            try:
                value = objective(point)
            except Exception as e:
                raise ObjectiveError(
                    f"objective failed on provider {self.provider} point {point}"
                ) from e
            self.optimizer.observe(point, value)

    @property
    def best_value(self):
        return self.optimizer.trace.best_value

    @property
    def best_point(self):
        return self.optimizer.trace.best_point

    def report(self) -> ArmReport:
        trace = self.optimizer.trace
        return ArmReport(
            provider=self.provider,
            pulls=len(trace),
            best_point=trace.best_point,
            best_value=trace.best_value,
            eliminated_round=self.eliminated_round,
            saturated=self.saturated,
            trace=trace,
        )


def cloudbandit(
    space: SearchSpace,
    objective,
    kind: BboKind,
    b1: int,
    eta: float = 2.0,
    seed: int = 0,
    init_design: int = DEFAULT_INIT_DESIGN,
) -> MultiCloudResult:
    """Best-provider identification by successive elimination.

    Runs K rounds over K provider arms.  In round m every active arm's
    optimizer advances b1 * eta^(m-1) evaluations; the active arm with the
    worst (highest) best-loss is then eliminated, ties going first to
    saturated arms and then to the later-declared provider.  The single
    surviving arm's best pair is returned.  Saturated arms skip their pulls
    without spending budget, so the realized evaluation count can fall
    short of the nominal schedule total (reported via planned_evals).
    """
    K = space.n_providers
    budgets = round_budgets(K, b1, eta)
    arms = [_Arm(space, k, kind, seed, init_design) for k in range(K)]
    active = list(range(K))
    for m, pulls in enumerate(budgets, start=1):
        for k in active:
            arms[k].advance(pulls, objective)
        if len(active) > 1:
            worst = max(active, key=lambda k: (arms[k].best_value, arms[k].saturated, k))
            arms[worst].eliminated_round = m
            active.remove(worst)
    survivor = arms[active[0]]
    return _result_from_arms(
        space,
        [a.report() for a in arms],
        survivor.best_point,
        survivor.best_value,
        planned=cb_total_budget(K, b1, eta),
    )


# ---------------------------------------------------------------------------
# Leave-one-out linear predictor baseline


LOO_FEATURE_NAMES = ("intercept", "inverse_size", "log_size", "size")


def _size_features(n: int) -> np.ndarray:
    return np.array([1.0, 1.0 / n, math.log(n), float(n)])


@dataclass(frozen=True)
class PredictionEntry:
    point: ConfigPoint
    predicted: float
    fallback: bool  # True when the cell used the mean-predictor fallback


def linear_predict_loo(table: ObjectiveTable, workload: str, target: Target) -> list[PredictionEntry]:
    """Rank every point by a leave-one-out linear model in cluster size.

    For each (provider, configuration) the value at each node count is
    predicted from the remaining node counts via least squares on the
    features (1, 1/n, log n, n).  Cells with fewer than two training sizes
    fall back to the training mean and are flagged.  Entries are returned
    sorted by predicted value ascending (ties keep canonical point order);
    the first entry is the recommendation.
    """
    space = table.space
    sizes = space.node_counts
    if len(sizes) < 2:
        raise DomainError(f"need at least 2 node counts for leave-one-out fits, got {len(sizes)}")
    if workload not in table.workloads:
        raise DomainError(f"unknown workload {workload!r}")

    entries = []
    for k, prov in enumerate(space.providers):
        for assignment in prov.assignments():
            points = {
                n: ConfigPoint(provider=k, nodes=n, assignment=tuple(assignment)) for n in sizes
            }
            values = {n: lookup(table, workload, points[n], target) for n in sizes}
            for n in sizes:
                train = [m for m in sizes if m != n]
                y = np.array([values[m] for m in train])
                if len(train) < 2:
                    predicted, fallback = float(y.mean()), True
                else:
                    design = np.vstack([_size_features(m) for m in train])
                    theta, *_ = np.linalg.lstsq(design, y, rcond=None)
                    predicted = float(_size_features(n) @ theta)
                    fallback = not math.isfinite(predicted)
                    if fallback:
                        predicted = float(y.mean())
                entries.append(PredictionEntry(point=points[n], predicted=predicted, fallback=fallback))
    order = {p: i for i, p in enumerate(enumerate_all(space))}
    entries.sort(key=lambda e: (e.predicted, order[e.point]))
    return entries


def linear_predictor_result(table: ObjectiveTable, workload: str, target: Target) -> MultiCloudResult:
    """Package the predictor as a search result for the experiment harness.

    The leave-one-out fits read the entire table for this workload, so the
    search expense is the full sweep over all points.
    """
    ranking = linear_predict_loo(table, workload, target)
    recommended = ranking[0].point
    trace = SearchTrace()
    for p in table.points:
        trace.record(p, lookup(table, workload, p, target))
    arm = ArmReport(
        provider=None,
        pulls=len(trace),
        best_point=recommended,
        best_value=lookup(table, workload, recommended, target),
        eliminated_round=None,
        saturated=True,
        trace=trace,
    )
    return MultiCloudResult(
        space=table.space,
        chosen_point=recommended,
        loss=lookup(table, workload, recommended, target),
        arms=(arm,),
        total_evals=len(trace),
        search_expense=trace.total_expense,
        planned_evals=None,
    )
