import json

import numpy as np
import pytest

from conftest import make_table
from mcopt.bbo import BboKind, CandidateSet, run_bbo
from mcopt.dataset import Target, generate_synthetic, lookup
from mcopt.errors import BudgetError, DomainError
from mcopt.multicloud import (
    BudgetSchedule,
    cb_b1_for_budget,
    cb_total_budget,
    cloudbandit,
    flattened_optimize,
    independent_optimize,
    linear_predict_loo,
    linear_predictor_result,
    round_budgets,
)
from mcopt.space import ConfigPoint, ProviderSpace, SearchSpace, enumerate_all
from mcopt.util import stable_seed


def three_tier_space(sizes=(2, 2, 2), nodes=(2, 3)):
    """Three providers whose parameter counts are given by sizes."""
    providers = tuple(
        ProviderSpace(name=f"p{k}", params=(("a", tuple(f"v{i}" for i in range(s))),))
        for k, s in enumerate(sizes)
    )
    return SearchSpace(providers=providers, node_counts=nodes)


def banded_table(space, bands):
    """Providers get disjoint value bands; strict ordering at every step."""
    rng = np.random.default_rng(0)

    def cell(w, p):
        lo, hi = bands[p.provider]
        v = float(rng.uniform(lo, hi))
        return (v, v / 100.0)

    return make_table(space, cell)


class TestFlattened:
    def test_exhaustive_full_budget_zero_regret(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=2)
        for target in Target:
            values = table.values("w0", target)
            res = flattened_optimize(
                space88, lambda p: lookup(table, "w0", p, target), BboKind.EXHAUSTIVE, 88, seed=0
            )
            assert res.loss == values.min()
            assert res.total_evals == 88

    def test_budget_one_single_evaluation(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=2)
        res = flattened_optimize(
            space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.RANDOM_SEARCH, 1, seed=0
        )
        assert res.total_evals == 1
        assert res.loss == lookup(table, "w0", res.chosen_point, Target.COST)

    def test_same_seed_same_result(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=2)
        runs = [
            flattened_optimize(
                space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.CHERRYPICK_BO, 9, seed=5
            )
            for _ in range(2)
        ]
        assert runs[0].chosen_point == runs[1].chosen_point
        assert runs[0].loss == runs[1].loss
        assert runs[0].search_expense == runs[1].search_expense


class TestIndependent:
    def test_equal_split_33_over_3(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=4)
        res = independent_optimize(
            space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.RANDOM_SEARCH, 33, seed=0
        )
        assert [len(a.trace) for a in res.arms] == [11, 11, 11]

    def test_remainder_goes_to_earliest_providers(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=4)
        res = independent_optimize(
            space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.RANDOM_SEARCH, 11, seed=0
        )
        assert [len(a.trace) for a in res.arms] == [4, 4, 3]

    def test_budget_below_provider_count_rejected(self, space88):
        with pytest.raises(BudgetError):
            independent_optimize(space88, lambda p: 1.0, BboKind.RANDOM_SEARCH, 2, seed=0)

    def test_single_provider_equals_run_bbo(self):
        space = SearchSpace(
            providers=(ProviderSpace(name="only", params=(("a", ("x", "y", "z")),)),),
            node_counts=(2, 3, 4),
        )
        table, _ = generate_synthetic(space, 1, seed=6)

        def objective(p):
            return lookup(table, "w0", p, Target.TIME)

        res = independent_optimize(space, objective, BboKind.CHERRYPICK_BO, 5, seed=9)
        trace = run_bbo(
            BboKind.CHERRYPICK_BO, CandidateSet.for_provider(space, 0), objective, 5, stable_seed(9, 0)
        )
        assert [(s.point, s.value) for s in res.arms[0].trace.steps] == [
            (s.point, s.value) for s in trace.steps
        ]
        assert res.loss == trace.best_value

    def test_winner_is_lowest_best_loss(self):
        space = three_tier_space()
        table = banded_table(space, {0: (10, 20), 1: (1, 2), 2: (100, 200)})
        res = independent_optimize(
            space, lambda p: lookup(table, "w0", p, Target.TIME), BboKind.RANDOM_SEARCH, 6, seed=0
        )
        assert res.chosen_point.provider == 1


class TestBudgetArithmetic:
    def test_total_budget_examples(self):
        assert cb_total_budget(3, 1, 2.0) == 11
        assert cb_total_budget(3, 8, 2.0) == 88
        assert cb_total_budget(1, 5, 2.0) == 5

    def test_round_budgets_shape(self):
        assert round_budgets(3, 1, 2.0) == [1, 2, 4]
        assert round_budgets(3, 2, 2.0) == [2, 4, 8]

    def test_non_integral_round_budget_rejected(self):
        with pytest.raises(DomainError):
            round_budgets(3, 1, 1.5)  # 1, 1.5, ...
        assert round_budgets(3, 4, 1.5) == [4, 6, 9]

    def test_inverse_examples(self):
        assert cb_b1_for_budget(3, 2.0, 88) == 8
        assert cb_b1_for_budget(3, 2.0, 11) == 1
        assert cb_b1_for_budget(1, 2.0, 5) == 5

    def test_inverse_never_overspends(self):
        for budget in range(11, 120):
            b1 = cb_b1_for_budget(3, 2.0, budget)
            assert cb_total_budget(3, b1, 2.0) <= budget
            assert cb_total_budget(3, b1 + 1, 2.0) > budget

    def test_inverse_infeasible_budget(self):
        with pytest.raises(BudgetError):
            cb_b1_for_budget(3, 2.0, 10)

    def test_bad_parameters(self):
        with pytest.raises(DomainError):
            cb_total_budget(0, 1, 2.0)
        with pytest.raises(DomainError):
            cb_total_budget(3, 0, 2.0)
        with pytest.raises(DomainError):
            cb_total_budget(3, 1, 1.0)

    def test_schedule_type_totals(self):
        sched = BudgetSchedule(b1=2, eta=2.0, rounds=3)
        assert sched.round_budgets() == [2, 4, 8]
        assert sched.total() == 22 == cb_total_budget(3, 2, 2.0)
        with pytest.raises(DomainError):
            BudgetSchedule(b1=1, eta=1.5, rounds=3)


class TestCloudBandit:
    def test_total_evaluations_match_schedule(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=8)
        res = cloudbandit(
            space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.RBF_OPT, b1=1, eta=2.0, seed=0
        )
        assert res.total_evals == 11 == res.planned_evals
        pulls = sorted(len(a.trace) for a in res.arms)
        assert pulls == [1, 3, 7]  # eliminated round 1, round 2, survivor

    def test_exactly_k_minus_one_eliminations(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=8)
        res = cloudbandit(
            space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.CHERRYPICK_BO, b1=2, seed=1
        )
        eliminated = [a for a in res.arms if a.eliminated_round is not None]
        assert len(eliminated) == 2
        survivors = [a for a in res.arms if a.eliminated_round is None]
        assert len(survivors) == 1
        assert survivors[0].best_point == res.chosen_point

    def test_dominant_provider_always_survives(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=31, scenario="dominant:2:0.1")
        for seed in range(20):
            res = cloudbandit(
                space88,
                lambda p: lookup(table, "w0", p, Target.TIME),
                BboKind.RBF_OPT,
                b1=1,
                eta=2.0,
                seed=seed,
            )
            assert res.chosen_point.provider == 2
            assert res.total_evals == 11

    def test_elimination_order_matches_value_bands(self):
        space = three_tier_space(sizes=(3, 3, 3), nodes=(2, 3, 4))
        table = banded_table(space, {0: (10, 20), 1: (1, 2), 2: (100, 200)})
        for seed in range(10):
            res = cloudbandit(
                space, lambda p: lookup(table, "w0", p, Target.TIME), BboKind.RANDOM_SEARCH, b1=1, seed=seed
            )
            rounds = {a.provider: a.eliminated_round for a in res.arms}
            assert rounds == {2: 1, 0: 2, 1: None}
            assert res.chosen_point.provider == 1

    def test_tie_eliminates_later_provider(self):
        space = three_tier_space(sizes=(3, 3, 3), nodes=(2, 3, 4))
        table = make_table(space, lambda w, p: (5.0, 5.0))
        res = cloudbandit(
            space, lambda p: lookup(table, "w0", p, Target.TIME), BboKind.RANDOM_SEARCH, b1=1, seed=0
        )
        rounds = {a.provider: a.eliminated_round for a in res.arms}
        assert rounds == {2: 1, 1: 2, 0: None}

    def test_tie_prefers_eliminating_saturated_arm(self):
        # provider 0 has a single point: its non-repeating engine saturates
        # during round 1 while the others are still unsaturated
        space = three_tier_space(sizes=(1, 3, 3), nodes=(2,))
        table = make_table(space, lambda w, p: (5.0, 5.0))
        res = cloudbandit(
            space, lambda p: lookup(table, "w0", p, Target.TIME), BboKind.RBF_OPT, b1=2, seed=0
        )
        rounds = {a.provider: a.eliminated_round for a in res.arms}
        assert rounds[0] == 1

    def test_saturated_arms_skip_pulls_and_report_shortfall(self):
        space = three_tier_space(sizes=(1, 1, 1), nodes=(2,))  # one point per provider
        table = make_table(space, lambda w, p: (1.0 + p.provider, 1.0))
        res = cloudbandit(
            space, lambda p: lookup(table, "w0", p, Target.TIME), BboKind.RBF_OPT, b1=1, eta=2.0, seed=0
        )
        assert res.total_evals == 3
        assert res.planned_evals == 11
        assert res.chosen_point.provider == 0

    def test_per_arm_best_non_increasing(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=10)
        res = cloudbandit(
            space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.BILAL_COST_BO, b1=2, seed=7
        )
        for arm in res.arms:
            bests = [s.best_value for s in arm.trace.steps]
            assert all(b2 <= b1 for b1, b2 in zip(bests, bests[1:]))

    def test_search_expense_sums_all_arm_values(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=10)
        res = cloudbandit(
            space88, lambda p: lookup(table, "w0", p, Target.TIME), BboKind.RBF_OPT, b1=2, seed=3
        )
        expected = sum(s.value for a in res.arms for s in a.trace.steps)
        assert res.search_expense == pytest.approx(expected)

    def test_same_seed_identical(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=10)
        runs = [
            cloudbandit(
                space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.RBF_OPT, b1=1, seed=13
            )
            for _ in range(2)
        ]
        assert runs[0].to_json_dict() == runs[1].to_json_dict()

    def test_json_dict_schema(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=10)
        res = cloudbandit(
            space88, lambda p: lookup(table, "w0", p, Target.COST), BboKind.RBF_OPT, b1=1, seed=0
        )
        doc = json.loads(json.dumps(res.to_json_dict()))
        assert set(doc) == {
            "chosen_provider",
            "chosen_config",
            "chosen_nodes",
            "loss",
            "total_evals",
            "search_expense",
            "arms",
        }
        assert {a["provider"] for a in doc["arms"]} == {"aws", "azure", "gcp"}
        assert set(doc["arms"][0]) == {"provider", "pulls", "best_value", "eliminated_round"}


class TestLinearPredictor:
    def test_exact_recovery_on_noise_free_tables(self):
        space = SearchSpace(
            providers=(
                ProviderSpace(name="p0", params=(("a", ("x", "y")),)),
                ProviderSpace(name="p1", params=(("b", ("u", "v", "w")),)),
            ),
            node_counts=(2, 3, 4, 5, 6),
        )
        table, _ = generate_synthetic(space, 2, seed=21, scenario="ernest_exact")
        for w in table.workloads:
            ranking = linear_predict_loo(table, w, Target.TIME)
            truth = {p: lookup(table, w, p, Target.TIME) for p in table.points}
            assert max(abs(e.predicted - truth[e.point]) for e in ranking) < 1e-6
            best = min(table.points, key=lambda p: (truth[p],))
            assert ranking[0].point == best
            assert not any(e.fallback for e in ranking)

    def test_constant_table_ranks_first_canonical_point_first(self):
        space = SearchSpace(
            providers=(ProviderSpace(name="p0", params=(("a", ("x", "y")),)),),
            node_counts=(2, 3, 4, 5, 6),
        )
        table = make_table(space, lambda w, p: (3.0, 3.0))
        ranking = linear_predict_loo(table, "w0", Target.TIME)
        assert all(e.predicted == pytest.approx(3.0, abs=1e-9) for e in ranking)
        assert ranking[0].point == enumerate_all(space)[0]

    def test_two_sizes_fall_back_to_training_value(self):
        space = SearchSpace(
            providers=(ProviderSpace(name="p0", params=(("a", ("x",)),)),),
            node_counts=(2, 4),
        )
        table = make_table(space, lambda w, p: (10.0 * p.nodes, 1.0))
        ranking = linear_predict_loo(table, "w0", Target.TIME)
        by_point = {e.point: e for e in ranking}
        p2 = ConfigPoint(provider=0, nodes=2, assignment=("x",))
        p4 = ConfigPoint(provider=0, nodes=4, assignment=("x",))
        assert by_point[p2].fallback and by_point[p4].fallback
        assert by_point[p2].predicted == 40.0  # trained on the size-4 value
        assert by_point[p4].predicted == 20.0

    def test_single_size_rejected(self):
        space = SearchSpace(
            providers=(ProviderSpace(name="p0", params=(("a", ("x",)),)),),
            node_counts=(3,),
        )
        table = make_table(space, lambda w, p: (1.0, 1.0))
        with pytest.raises(DomainError):
            linear_predict_loo(table, "w0", Target.TIME)

    def test_predictor_result_accounts_full_table_expense(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=12)
        res = linear_predictor_result(table, "w0", Target.COST)
        assert res.total_evals == 88
        assert res.search_expense == pytest.approx(float(table.values("w0", Target.COST).sum()))
        assert res.loss == lookup(table, "w0", res.chosen_point, Target.COST)
