import random
import re

import numpy as np
import pytest

from conftest import make_table
from mcopt.bbo import BboKind
from mcopt.dataset import Target, generate_synthetic, lookup
from mcopt.errors import DomainError, IntegrityError, McoptError
from mcopt.experiment import (
    AlgorithmSpec,
    ExperimentPlan,
    RegretRecord,
    aggregate,
    box_stats,
    emit_report,
    expected_rs_regret,
    regret,
    run_plan,
    savings_fraction,
    summary_table,
    true_minimum,
)
from mcopt.space import ProviderSpace, SearchSpace, enumerate_all


def eight_point_space():
    return SearchSpace(
        providers=(ProviderSpace(name="p", params=(("a", ("x", "y")),)),),
        node_counts=(2, 3, 4, 5),
    )


class TestTrueMinimum:
    def test_dominant_table_minimum_in_dominant_provider(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=3, scenario="dominant:0:0.1")
        point, _ = true_minimum(table, "w0", Target.TIME)
        assert point.provider == 0

    def test_constant_table_first_canonical_point(self):
        space = eight_point_space()
        table = make_table(space, lambda w, p: (2.0, 2.0))
        point, fstar = true_minimum(table, "w0", Target.TIME)
        assert point == enumerate_all(space)[0]
        assert fstar == 2.0

    def test_scan_is_deterministic(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=3)
        assert true_minimum(table, "w0", Target.COST) == true_minimum(table, "w0", Target.COST)


class TestRegret:
    def test_zero_at_optimum(self):
        assert regret(5.0, 5.0) == 0.0

    def test_half_above(self):
        assert regret(1.5, 1.0) == pytest.approx(0.5)

    def test_scale_free(self):
        assert regret(0.10, 0.05) == pytest.approx(1.0)

    def test_below_minimum_is_integrity_error(self):
        with pytest.raises(IntegrityError):
            regret(0.9, 1.0)

    def test_requires_positive_minimum(self):
        with pytest.raises(DomainError):
            regret(1.0, 0.0)


class TestExpectedRsRegret:
    def test_budget_one_is_mean_regret(self):
        space = eight_point_space()
        rng = np.random.default_rng(1)
        vals = {}
        table = make_table(
            space, lambda w, p: vals.setdefault(p, (float(rng.uniform(1, 9)), 1.0))
        )
        values = table.values("w0", Target.TIME)
        expected = (values.mean() - values.min()) / values.min()
        assert expected_rs_regret(table, "w0", Target.TIME, 1) == pytest.approx(expected)

    def test_single_point_always_zero(self):
        space = SearchSpace(
            providers=(ProviderSpace(name="p", params=(("a", ("x",)),)),),
            node_counts=(2,),
        )
        table = make_table(space, lambda w, p: (4.0, 4.0))
        for budget in (1, 5, 50):
            assert expected_rs_regret(table, "w0", Target.TIME, budget) == 0.0

    def test_large_budget_approaches_zero(self):
        # unique minimum with >= 1% margin; B = 10 * M
        space = eight_point_space()
        pts = enumerate_all(space)
        vals = {p: 2.0 + 0.1 * i for i, p in enumerate(pts)}
        table = make_table(space, lambda w, p: (vals[p], 1.0))
        assert expected_rs_regret(table, "w0", Target.TIME, 10 * len(pts)) < 1e-3

    def test_non_increasing_in_budget(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=5)
        values = [expected_rs_regret(table, "w0", Target.COST, b) for b in range(1, 60)]
        assert all(b2 <= b1 for b1, b2 in zip(values, values[1:]))

    def test_invariant_under_uniform_scaling(self):
        space = eight_point_space()
        rng = np.random.default_rng(2)
        base = {p: float(rng.uniform(1, 9)) for p in enumerate_all(space)}
        t1 = make_table(space, lambda w, p: (base[p], base[p]))
        t2 = make_table(space, lambda w, p: (7.0 * base[p], 7.0 * base[p]))
        for budget in (1, 4, 9):
            assert expected_rs_regret(t2, "w0", Target.TIME, budget) == pytest.approx(
                expected_rs_regret(t1, "w0", Target.TIME, budget), rel=1e-12
            )

    def test_monte_carlo_agreement_through_the_harness(self):
        # oracle check routed through run_plan's own random-search cells
        space = eight_point_space()
        rng = np.random.default_rng(3)
        base = {p: float(rng.uniform(1, 9)) for p in enumerate_all(space)}
        table = make_table(space, lambda w, p: (base[p], base[p]))
        budgets = (1, 5, 11, 33)
        plan = ExperimentPlan(
            table=table,
            algorithms=(AlgorithmSpec.parse("rs"),),
            targets=(Target.TIME,),
            budgets=budgets,
            seeds=2000,
        )
        records, _ = run_plan(plan)
        for budget in budgets:
            sample = np.array([r.regret for r in records if r.budget == budget])
            exact = expected_rs_regret(table, "w0", Target.TIME, budget)
            three_se = 3.0 * sample.std(ddof=1) / np.sqrt(len(sample))
            assert abs(sample.mean() - exact) <= three_se


class TestAlgorithmSpec:
    def test_parse_labels(self):
        assert AlgorithmSpec.parse("rs").label == "rs"
        assert AlgorithmSpec.parse("cb:rbfopt").label == "cb:rbfopt"
        assert AlgorithmSpec.parse("cloudbandit:rbfopt").label == "cb:rbfopt"
        assert AlgorithmSpec.parse("flat:cherrypick").component is BboKind.CHERRYPICK_BO
        assert AlgorithmSpec.parse("indep:bilal-cost").meta == "indep"
        assert AlgorithmSpec.parse("linear-pred").component is None

    def test_component_requirements(self):
        with pytest.raises(DomainError):
            AlgorithmSpec.parse("cb")
        with pytest.raises(DomainError):
            AlgorithmSpec.parse("rs:cherrypick")
        with pytest.raises(DomainError):
            AlgorithmSpec.parse("mystery")


class TestSavings:
    def test_zero_when_free_search_matches_random(self):
        assert savings_fraction(0.0, 2.5, 2.5, 64) == 0.0

    def test_formula_identity_on_records(self, space88):
        table, _ = generate_synthetic(space88, 2, seed=9)
        plan = ExperimentPlan(
            table=table,
            algorithms=(AlgorithmSpec.parse("rs"), AlgorithmSpec.parse("cb:rbfopt")),
            targets=(Target.COST,),
            budgets=(11,),
            seeds=2,
        )
        _, savings = run_plan(plan)
        for s in savings:
            n = s.n_production
            expected = (n * s.r_rand - (s.c_opt + n * s.r_opt)) / (n * s.r_rand)
            assert s.savings == expected

    def test_exhaustive_strictly_negative_savings(self, space88):
        for seed in (0, 1, 2):
            table, _ = generate_synthetic(space88, 2, seed=seed)
            plan = ExperimentPlan(
                table=table,
                algorithms=(AlgorithmSpec.parse("exhaustive"),),
                targets=(Target.COST, Target.TIME),
                budgets=(88,),
                seeds=1,
                n_production=64,
            )
            _, savings = run_plan(plan)
            assert savings
            assert all(s.savings < 0 for s in savings)

    def test_r_rand_is_mean_over_all_points(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=9)
        plan = ExperimentPlan(
            table=table,
            algorithms=(AlgorithmSpec.parse("rs"),),
            targets=(Target.TIME,),
            budgets=(11,),
            seeds=1,
        )
        _, savings = run_plan(plan)
        assert savings[0].r_rand == pytest.approx(float(table.values("w0", Target.TIME).mean()))


class TestRunPlan:
    def test_record_counts_match_grid(self, space88):
        table, _ = generate_synthetic(space88, 2, seed=11)
        algos = (AlgorithmSpec.parse("rs"), AlgorithmSpec.parse("indep:rbfopt"))
        plan = ExperimentPlan(
            table=table,
            algorithms=algos,
            targets=(Target.COST, Target.TIME),
            budgets=(11, 22, 33),
            seeds=4,
        )
        records, savings = run_plan(plan)
        assert len(records) == 2 * 2 * 2 * 3 * 4  # workloads x algos x targets x budgets x seeds
        assert len(savings) == 2 * 2 * 2 * 3

    def test_jobs_do_not_change_results(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=11)
        plan = ExperimentPlan(
            table=table,
            algorithms=(AlgorithmSpec.parse("rs"), AlgorithmSpec.parse("cb:cherrypick")),
            targets=(Target.COST,),
            budgets=(11, 22),
            seeds=3,
        )
        serial = run_plan(plan, jobs=1)
        parallel = run_plan(plan, jobs=4)
        assert serial == parallel

    def test_cell_failure_names_cell(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=11)
        plan = ExperimentPlan(
            table=table,
            algorithms=(AlgorithmSpec.parse("indep:rbfopt"),),
            targets=(Target.COST,),
            budgets=(2,),  # below the provider count: the cell must fail
            seeds=1,
        )
        with pytest.raises(McoptError) as err:
            run_plan(plan)
        assert "indep:rbfopt" in str(err.value) and "w0" in str(err.value)

    def test_plan_validation(self, space88):
        table, _ = generate_synthetic(space88, 1, seed=11)
        with pytest.raises(DomainError):
            ExperimentPlan(table=table, algorithms=(), targets=(Target.COST,), budgets=(11,), seeds=1)
        with pytest.raises(DomainError):
            ExperimentPlan(
                table=table,
                algorithms=(AlgorithmSpec.parse("rs"),),
                targets=(Target.COST,),
                budgets=(22, 11),
                seeds=1,
            )
        with pytest.raises(DomainError):
            ExperimentPlan(
                table=table,
                algorithms=(AlgorithmSpec.parse("rs"),),
                targets=(Target.COST,),
                budgets=(11,),
                seeds=0,
            )


class TestBoxStats:
    def test_five_point_quartiles(self):
        b = box_stats([1, 2, 3, 4, 5])
        assert (b.q25, b.median, b.q75) == (2.0, 3.0, 4.0)
        assert (b.whisker_low, b.whisker_high) == (1.0, 5.0)

    def test_constant_values_zero_width(self):
        b = box_stats([7.0, 7.0, 7.0])
        assert b.q25 == b.median == b.q75 == b.whisker_low == b.whisker_high == 7.0

    def test_outlier_excluded_from_whisker(self):
        b = box_stats([0, 0, 0, 0, 100])
        assert b.q25 == b.q75 == 0.0
        assert b.whisker_high == 0.0
        assert b.whisker_low == 0.0

    def test_empty_rejected(self):
        with pytest.raises(DomainError):
            box_stats([])

    def test_order_independent(self):
        values = [3.0, 1.0, 4.0, 1.5, 9.2, 2.6]
        shuffled = list(values)
        random.Random(0).shuffle(shuffled)
        assert box_stats(values) == box_stats(shuffled)


class TestAggregate:
    def _records(self):
        out = []
        for algo in ("a", "b"):
            for budget in (11, 22):
                for seed in range(5):
                    out.append(
                        RegretRecord(
                            workload="w0",
                            algorithm=algo,
                            target=Target.COST,
                            budget=budget,
                            seed=seed,
                            found=1.0,
                            fstar=1.0,
                            regret=float(seed) * (2.0 if algo == "b" else 1.0),
                        )
                    )
        return out

    def test_group_means(self):
        stats = aggregate(self._records(), ("algorithm", "budget"), "regret")
        assert stats[("a", 11)].mean == pytest.approx(2.0)
        assert stats[("b", 22)].mean == pytest.approx(4.0)
        assert stats[("a", 11)].count == 5

    def test_permutation_invariant(self):
        records = self._records()
        shuffled = list(records)
        random.Random(3).shuffle(shuffled)
        assert aggregate(records, ("algorithm",), "regret") == aggregate(shuffled, ("algorithm",), "regret")


class TestEmitReport:
    def _regret_records(self, algos=("alg1", "alg2"), budgets=tuple(range(11, 99, 11))):
        records = []
        for algo in algos:
            for i, b in enumerate(budgets):
                records.append(
                    RegretRecord(
                        workload="w0",
                        algorithm=algo,
                        target=Target.COST,
                        budget=b,
                        seed=0,
                        found=2.0,
                        fstar=1.0,
                        regret=1.0 / (i + 1),
                    )
                )
        return records

    def test_line_chart_structure(self, tmp_path):
        emit_report(self._regret_records(), [], tmp_path)
        svg = (tmp_path / "regret_cost.svg").read_text()
        polylines = re.findall(r'<polyline[^>]*points="([^"]+)"', svg)
        assert len(polylines) == 2
        for pts in polylines:
            assert len(pts.split()) == 8

    def test_deterministic_bytes(self, tmp_path):
        emit_report(self._regret_records(), [], tmp_path / "one")
        emit_report(self._regret_records(), [], tmp_path / "two")
        for name in ("regret.csv", "savings.csv", "regret_cost.svg"):
            assert (tmp_path / "one" / name).read_bytes() == (tmp_path / "two" / name).read_bytes()

    def test_empty_records_rejected(self, tmp_path):
        with pytest.raises(DomainError):
            emit_report([], [], tmp_path)

    def test_csv_headers(self, tmp_path, space88):
        table, _ = generate_synthetic(space88, 1, seed=13)
        plan = ExperimentPlan(
            table=table,
            algorithms=(AlgorithmSpec.parse("rs"),),
            targets=(Target.COST,),
            budgets=(11,),
            seeds=2,
        )
        records, savings = run_plan(plan)
        emit_report(records, savings, tmp_path)
        assert (tmp_path / "regret.csv").read_text().splitlines()[0] == (
            "workload,algorithm,target,budget,seed,found,fstar,regret"
        )
        assert (tmp_path / "savings.csv").read_text().splitlines()[0] == (
            "workload,algorithm,target,budget,N,C_opt,R_opt,R_rand,S"
        )
        assert (tmp_path / "savings_cost.svg").exists()

    def test_summary_table_mentions_all_cells(self):
        text = summary_table(self._regret_records())
        assert "target=cost" in text
        assert "alg1" in text and "alg2" in text
        assert "B=11" in text and "B=88" in text

    def test_charts_are_well_formed_self_contained_xml(self, tmp_path, space88):
        import xml.etree.ElementTree as ET

        table, _ = generate_synthetic(space88, 2, seed=17)
        plan = ExperimentPlan(
            table=table,
            algorithms=(AlgorithmSpec.parse("rs"), AlgorithmSpec.parse("cb:rbfopt")),
            targets=(Target.COST, Target.TIME),
            budgets=(11, 22),
            seeds=2,
        )
        records, savings = run_plan(plan)
        written = emit_report(records, savings, tmp_path)
        svgs = [p for p in written if p.endswith(".svg")]
        assert len(svgs) == 4  # regret + savings chart per target
        for path in svgs:
            text = (tmp_path / path).read_text() if not str(path).startswith("/") else open(path).read()
            root = ET.fromstring(text)
            assert root.tag.endswith("svg")
            assert "href" not in text  # no external references
