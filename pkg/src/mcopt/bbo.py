"""Black-box optimizer engines over a finite candidate set.

Every engine speaks the same suggest/observe protocol so the meta-level
algorithms can drive any of them one iteration at a time:

    opt = bbo_new(kind, candidates, seed)
    p = opt.suggest()          # raises Saturated once nothing is left
    opt.observe(p, value)

Random search draws with replacement; every model-guided engine proposes
each candidate at most once (re-evaluating a deterministic lookup buys no
information) and signals saturation when its finite domain is exhausted.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, ObjectiveError, ProtocolError, Saturated
from .space import ConfigPoint, SearchSpace, assignment_string, encode, encode_flat
from .surrogate import (
    AcquisitionKind,
    acquisition,
    forest_fit,
    gp_fit,
    rbf_fit,
)
from .util import fmt_float, stable_seed

DEFAULT_INIT_DESIGN = 3


class BboKind(enum.Enum):
    RANDOM_SEARCH = "random-search"
    CHERRYPICK_BO = "cherrypick"
    BILAL_COST_BO = "bilal-cost"
    BILAL_TIME_BO = "bilal-time"
    RBF_OPT = "rbfopt"
    EXHAUSTIVE = "exhaustive"

    @classmethod
    def parse(cls, text: str) -> "BboKind":
        aliases = {
            "rs": cls.RANDOM_SEARCH,
            "random": cls.RANDOM_SEARCH,
            "random-search": cls.RANDOM_SEARCH,
            "cherrypick": cls.CHERRYPICK_BO,
            "bilal-cost": cls.BILAL_COST_BO,
            "bilal-time": cls.BILAL_TIME_BO,
            "rbfopt": cls.RBF_OPT,
            "exhaustive": cls.EXHAUSTIVE,
        }
        key = text.strip().lower()
        if key not in aliases:
            raise DomainError(f"unknown optimizer kind {text!r}; expected one of {sorted(aliases)}")
        return aliases[key]


class CandidateSet:
    """Ordered candidates with their encodings and an evaluated mask."""

    def __init__(self, space: SearchSpace, points):
        points = tuple(points)
        if not points:
            raise DomainError("candidate set must be non-empty")
        self.space = space
        self.points = points
        self.evaluated = np.zeros(len(points), dtype=bool)
        self._encodings = None

    @property
    def encodings(self) -> np.ndarray:
        # computed on first use; random search and exhaustive never need it
        if self._encodings is None:
            providers = {p.provider for p in self.points}
            encoder = encode if len(providers) == 1 else encode_flat
            self._encodings = np.array([encoder(self.space, p) for p in self.points])
        return self._encodings

    @classmethod
    def for_provider(cls, space: SearchSpace, k: int) -> "CandidateSet":
        from .space import enumerate_provider

        return cls(space, enumerate_provider(space, k))

    @classmethod
    def spanning(cls, space: SearchSpace) -> "CandidateSet":
        from .space import enumerate_all

        return cls(space, enumerate_all(space))

    def __len__(self):
        return len(self.points)


@dataclass(frozen=True)
class TraceStep:
    step: int                  # 1-based evaluation counter
    point: ConfigPoint
    value: float
    cum_expense: float
    best_value: float


class SearchTrace:
    """Ordered record of evaluations with running best and expense."""

    def __init__(self):
        self.steps: list[TraceStep] = []
        self.best_point: ConfigPoint | None = None
        self.best_value: float | None = None

    def record(self, point: ConfigPoint, value: float) -> None:
        expense = (self.steps[-1].cum_expense if self.steps else 0.0) + value
        if self.best_value is None or value < self.best_value:
            self.best_point, self.best_value = point, value
        self.steps.append(
            TraceStep(
                step=len(self.steps) + 1,
                point=point,
                value=value,
                cum_expense=expense,
                best_value=self.best_value,
            )
        )

    def __len__(self):
        return len(self.steps)

    @property
    def total_expense(self) -> float:
        return self.steps[-1].cum_expense if self.steps else 0.0


def trace_to_csv(trace: SearchTrace, space: SearchSpace) -> str:
    lines = ["step,provider,config,nodes,value,cum_expense,best_value"]
    for s in trace.steps:
        lines.append(
            ",".join(
                [
                    str(s.step),
                    space.providers[s.point.provider].name,
                    assignment_string(space, s.point),
                    str(s.point.nodes),
                    fmt_float(s.value),
                    fmt_float(s.cum_expense),
                    fmt_float(s.best_value),
                ]
            )
        )
    return "\n".join(lines) + "\n"


class _Optimizer:
    """Shared suggest/observe bookkeeping; subclasses pick the next index."""

    kind: BboKind

    def __init__(self, candidates: CandidateSet, seed: int, init_design: int):
        self.candidates = candidates
        self.rng = np.random.default_rng(seed)
        self.seed = seed
        self.init_design = init_design
        self.trace = SearchTrace()
        self.observations: list[tuple[int, float]] = []
        self._pending: int | None = None

    def suggest(self) -> ConfigPoint:
        if self._pending is not None:
            raise ProtocolError("previous suggestion has not been observed yet")
        idx = self._next_index()
        self._pending = idx
        return self.candidates.points[idx]

    def observe(self, point: ConfigPoint, value: float) -> None:
        if self._pending is None:
            raise ProtocolError(f"observe() without a pending suggestion for {point}")
        if self.candidates.points[self._pending] != point:
            raise ProtocolError(
                f"observed point {point} does not match the pending suggestion "
                f"{self.candidates.points[self._pending]}"
            )
        value = float(value)
        if not (value > 0 and np.isfinite(value)):
            raise DomainError(f"observed value must be a positive finite scalar, got {value}")
        idx, self._pending = self._pending, None
        self.candidates.evaluated[idx] = True
        self.observations.append((idx, value))
        self.trace.record(point, value)

    def _next_index(self) -> int:
        raise NotImplementedError


class _RandomSearch(_Optimizer):
    kind = BboKind.RANDOM_SEARCH

    def _next_index(self) -> int:
        return int(self.rng.integers(len(self.candidates)))


class _Exhaustive(_Optimizer):
    kind = BboKind.EXHAUSTIVE

    def __init__(self, candidates, seed, init_design):
        super().__init__(candidates, seed, init_design)
        self._cursor = 0

    def _next_index(self) -> int:
        if self._cursor >= len(self.candidates):
            raise Saturated("all candidates evaluated")
        idx = self._cursor
        self._cursor += 1
        return idx


class _SurrogateOptimizer(_Optimizer):
    """Common init-design handling and candidate scoring for model engines."""

    def __init__(self, candidates, seed, init_design):
        if init_design < 1:
            raise DomainError(f"init_design must be >= 1, got {init_design}")
        if init_design > len(candidates):
            raise DomainError(
                f"init_design {init_design} exceeds candidate count {len(candidates)}"
            )
        super().__init__(candidates, seed, init_design)
        self._init_order = [
            int(i) for i in self.rng.choice(len(candidates), size=init_design, replace=False)
        ]

    def _next_index(self) -> int:
        unevaluated = np.flatnonzero(~self.candidates.evaluated)
        if unevaluated.size == 0:
            raise Saturated("all candidates evaluated")
        if len(self.observations) < self.init_design:
            return self._init_order[len(self.observations)]
        scores = self._scores(unevaluated)
        return int(unevaluated[int(np.argmax(scores))])  # argmax keeps canonical tie order

    def _training_data(self):
        idx = [i for i, _ in self.observations]
        y = np.array([v for _, v in self.observations])
        return self.candidates.encodings[idx], y

    def _best_observed(self) -> float:
        return min(v for _, v in self.observations)

    def _scores(self, unevaluated: np.ndarray) -> np.ndarray:
        raise NotImplementedError


class _GpOptimizer(_SurrogateOptimizer):
    acquisition_kind: AcquisitionKind

    def _scores(self, unevaluated):
        X, y = self._training_data()
        model = gp_fit(X, y, log_transform=True)
        mean, std = model.predict(self.candidates.encodings[unevaluated])
        return acquisition(self.acquisition_kind, mean, std, self._best_observed())


class _CherryPickBo(_GpOptimizer):
    kind = BboKind.CHERRYPICK_BO
    acquisition_kind = AcquisitionKind.EI


class _BilalCostBo(_GpOptimizer):
    kind = BboKind.BILAL_COST_BO
    acquisition_kind = AcquisitionKind.LCB


class _BilalTimeBo(_SurrogateOptimizer):
    kind = BboKind.BILAL_TIME_BO

    def _scores(self, unevaluated):
        X, y = self._training_data()
        model = forest_fit(X, y, seed=stable_seed(self.seed, "forest", len(self.observations)))
        preds = [model.predict(self.candidates.encodings[i]) for i in unevaluated]
        mean = np.array([m for m, _ in preds])
        std = np.array([s for _, s in preds])
        return acquisition(AcquisitionKind.PI, mean, std, self._best_observed())


class _RbfOpt(_SurrogateOptimizer):
    """Cubic-RBF engine: three surrogate-minimizing steps, then one
    max-min-distance exploration step, repeating."""

    kind = BboKind.RBF_OPT

    def _scores(self, unevaluated):
        cycle_pos = (len(self.observations) - self.init_design) % 4
        enc = self.candidates.encodings
        if cycle_pos == 3:  # explore: fill the biggest gap in evaluated coverage
            evaluated = np.flatnonzero(self.candidates.evaluated)
            diffs = enc[unevaluated][:, None, :] - enc[evaluated][None, :, :]
            min_dist = np.sqrt((diffs**2).sum(axis=2)).min(axis=1)
            return min_dist
        X, y = self._training_data()
        model = rbf_fit(X, y)
        return -np.array([model.predict(enc[i]) for i in unevaluated])


_ENGINES = {
    BboKind.RANDOM_SEARCH: _RandomSearch,
    BboKind.CHERRYPICK_BO: _CherryPickBo,
    BboKind.BILAL_COST_BO: _BilalCostBo,
    BboKind.BILAL_TIME_BO: _BilalTimeBo,
    BboKind.RBF_OPT: _RbfOpt,
    BboKind.EXHAUSTIVE: _Exhaustive,
}


def bbo_new(kind: BboKind, candidates: CandidateSet, seed: int, init_design: int = DEFAULT_INIT_DESIGN):
    """Create a fresh optimizer over the candidate set.

    Model-guided kinds spend their first init_design suggestions on a seeded
    random sample without replacement before switching to surrogate scores.
    """
    return _ENGINES[kind](candidates, seed, init_design)


def run_bbo(
    kind: BboKind,
    candidates: CandidateSet,
    objective,
    budget: int,
    seed: int,
    init_design: int = DEFAULT_INIT_DESIGN,
) -> SearchTrace:
    """Drive one optimizer for up to ``budget`` evaluations of objective.

    Stops early only when a non-repeating engine saturates its finite
    domain; random search always uses the full budget.
    """
    if budget < 1:
        raise DomainError(f"budget must be >= 1, got {budget}")
    opt = bbo_new(kind, candidates, seed, init_design)
    for step in range(budget):
        try:
            point = opt.suggest()
        except Saturated:
            break
        try:
            value = objective(point)
        except Exception as e:
            raise ObjectiveError(
                f"objective failed at step {step + 1} on point {point} "
                f"(best so far: {opt.trace.best_value})"
            ) from e
        opt.observe(point, value)
    return opt.trace
