"""Command-line front end.

Subcommands:
  gen      generate a synthetic benchmark dataset CSV (plus price list)
  run      run one optimization on one workload, print the result as JSON
  sweep    run a full (algorithms x targets x budgets x seeds) grid + report
  savings  single-budget savings study across algorithms + report
  report   rebuild charts from previously written regret/savings CSVs

Exit codes: 0 success, 1 user error (bad flags or files), 2 internal error.
Log verbosity comes from MCOPT_LOG (error|info|debug, default info).
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

from .bbo import trace_to_csv
from .dataset import Scenario, Target, generate_synthetic, load_csv, lookup, write_csv, write_price_csv
from .errors import McoptError
from .experiment import (
    DEFAULT_PRODUCTION_RUNS,
    DEFAULT_SEED,
    AlgorithmSpec,
    ExperimentPlan,
    aggregate,
    emit_report,
    read_regret_csv,
    read_savings_csv,
    run_plan,
    summary_table,
)
from .multicloud import cloudbandit
from .space import default_space, load_space
from .util import atomic_write_text

log = logging.getLogger("mcopt")


def _configure_logging() -> None:
    level_name = os.environ.get("MCOPT_LOG", "info").lower()
    levels = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}
    if level_name not in levels:
        raise McoptError(f"MCOPT_LOG must be one of {sorted(levels)}, got {level_name!r}")
    logging.basicConfig(stream=sys.stderr, level=levels[level_name], format="mcopt: %(message)s")


def _load_space(args):
    return load_space(args.space) if args.space else default_space()


def _require_file(path, flag: str) -> Path:
    p = Path(path)
    if not p.is_file():
        raise McoptError(f"{flag} file not found: {p}")
    return p


def _parse_targets(text: str) -> tuple[Target, ...]:
    return tuple(Target.parse(t) for t in text.split(","))


def _parse_algos(text: str) -> tuple[AlgorithmSpec, ...]:
    return tuple(AlgorithmSpec.parse(a) for a in text.split(","))


def _cmd_gen(args) -> int:
    space = _load_space(args)
    table, prices = generate_synthetic(space, args.workloads, args.seed, Scenario.parse(args.scenario))
    write_csv(table, args.out)
    log.info("wrote %s (%d workloads x %d points)", args.out, args.workloads, space.size())
    if args.prices:
        write_price_csv(prices, args.prices)
        log.info("wrote %s", args.prices)
    return 0


def _cmd_run(args) -> int:
    space = _load_space(args)
    table = load_csv(space, _require_file(args.data, "--data"))
    algo = AlgorithmSpec.parse(args.algo)
    target = Target.parse(args.target)
    workload = args.workload
    if workload is None:
        workload = table.workloads[0]
    if algo.meta == "cb" and args.b1 is not None:
        result = cloudbandit(
            space,
            lambda p: lookup(table, workload, p, target),
            algo.component,
            b1=args.b1,
            eta=args.eta,
            seed=args.seed,
        )
    else:
        budget = args.budget
        if budget is None:
            if algo.meta in ("exhaustive", "linear-pred"):
                budget = space.size()
            else:
                raise McoptError(f"--budget is required for algorithm {algo.label!r}")
        result = algo.execute(table, workload, target, budget, args.seed, eta=args.eta)
    if args.trace_dir:
        trace_dir = Path(args.trace_dir)
        for arm in result.arms:
            label = space.providers[arm.provider].name if arm.provider is not None else "all"
            path = trace_dir / f"trace_{label}.csv"
            atomic_write_text(path, trace_to_csv(arm.trace, space))
            log.info("wrote %s", path)
    print(json.dumps(result.to_json_dict(), indent=2))
    return 0


def _make_plan(args, budgets) -> ExperimentPlan:
    space = _load_space(args)
    table = load_csv(space, _require_file(args.data, "--data"))
    workloads = tuple(args.workloads.split(",")) if args.workloads else ()
    return ExperimentPlan(
        table=table,
        algorithms=_parse_algos(args.algos),
        targets=_parse_targets(args.targets),
        budgets=tuple(budgets),
        seeds=args.seeds,
        n_production=args.n_production,
        base_seed=args.seed,
        eta=args.eta,
        workloads=workloads,
    )


def _cmd_sweep(args) -> int:
    budgets = tuple(int(b) for b in args.budgets.split(","))
    plan = _make_plan(args, budgets)
    regrets, savings = run_plan(plan, jobs=args.jobs)
    written = emit_report(regrets, savings, args.out)
    for path in written:
        log.info("wrote %s", path)
    print(summary_table(regrets))
    return 0


def _cmd_savings(args) -> int:
    plan = _make_plan(args, (args.budget,))
    regrets, savings = run_plan(plan, jobs=args.jobs)
    written = emit_report(regrets, savings, args.out)
    for path in written:
        log.info("wrote %s", path)
    stats = aggregate(savings, ("target", "algorithm"), "savings")
    print(f"{'target':<8}{'algorithm':<24}{'median S':>12}{'q25':>12}{'q75':>12}")
    for (target, algo), g in stats.items():
        print(f"{target.value:<8}{algo:<24}{g.box.median:>12.4f}{g.box.q25:>12.4f}{g.box.q75:>12.4f}")
    return 0


def _cmd_report(args) -> int:
    records_dir = Path(args.records)
    regret_path = records_dir / "regret.csv"
    savings_path = records_dir / "savings.csv"
    if not regret_path.is_file():
        raise McoptError(f"no regret.csv under {records_dir}")
    regrets = read_regret_csv(regret_path)
    savings = read_savings_csv(savings_path) if savings_path.is_file() else []
    out = args.out or str(records_dir)
    for path in emit_report(regrets, savings, out):
        log.info("wrote %s", path)
    print(summary_table(regrets))
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mcopt",
        description="search-based multi-cloud configuration over offline lookup datasets",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--space", help="space JSON file (default: built-in 3-provider space)")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED, help="global seed (default %(default)s)")

    p_gen = sub.add_parser("gen", help="generate a synthetic dataset CSV")
    add_common(p_gen)
    p_gen.add_argument("--workloads", type=int, default=1, help="number of workloads")
    p_gen.add_argument("--scenario", default="neutral", help="neutral | dominant:<k>:<factor> | ernest_exact")
    p_gen.add_argument("--out", required=True, help="output dataset CSV path")
    p_gen.add_argument("--prices", help="optional output price CSV path")
    p_gen.set_defaults(handler=_cmd_gen)

    p_run = sub.add_parser("run", help="run one optimization and print JSON")
    add_common(p_run)
    p_run.add_argument("--algo", required=True, help="e.g. rs, exhaustive, linear-pred, flat:cherrypick, cb:rbfopt")
    p_run.add_argument("--data", required=True, help="dataset CSV")
    p_run.add_argument("--workload", help="workload id (default: first in dataset)")
    p_run.add_argument("--target", required=True, help="time | cost")
    p_run.add_argument("--budget", type=int, help="evaluation budget")
    p_run.add_argument("--b1", type=int, help="cloudbandit initial per-round budget (alternative to --budget)")
    p_run.add_argument("--eta", type=float, default=2.0, help="cloudbandit growth factor")
    p_run.add_argument("--trace-dir", help="also write per-arm search traces as CSV into this directory")
    p_run.set_defaults(handler=_cmd_run)

    def add_plan_flags(p):
        p.add_argument("--data", required=True, help="dataset CSV")
        p.add_argument("--algos", required=True, help="comma list, e.g. rs,cb:rbfopt,flat:cherrypick")
        p.add_argument("--targets", default="cost,time", help="comma list of targets")
        p.add_argument("--workloads", help="comma list of workload ids (default: all in the dataset)")
        p.add_argument("--seeds", type=int, default=50, help="repetitions per cell")
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")
        p.add_argument("--eta", type=float, default=2.0, help="cloudbandit growth factor")
        p.add_argument(
            "--n-production",
            type=int,
            default=DEFAULT_PRODUCTION_RUNS,
            help="production runs per search for the savings metric",
        )
        p.add_argument("--out", required=True, help="report output directory")

    p_sweep = sub.add_parser("sweep", help="full budget-grid experiment + report")
    add_common(p_sweep)
    add_plan_flags(p_sweep)
    p_sweep.add_argument("--budgets", required=True, help="comma list, e.g. 11,22,33")
    p_sweep.set_defaults(handler=_cmd_sweep)

    p_sav = sub.add_parser("savings", help="single-budget savings study + report")
    add_common(p_sav)
    add_plan_flags(p_sav)
    p_sav.add_argument("--budget", type=int, required=True, help="search budget for every algorithm")
    p_sav.set_defaults(handler=_cmd_savings)

    p_rep = sub.add_parser("report", help="rebuild charts from recorded CSVs")
    p_rep.add_argument("--records", required=True, help="directory with regret.csv (and savings.csv)")
    p_rep.add_argument("--out", help="output directory (default: records dir)")
    p_rep.set_defaults(handler=_cmd_report)
    return parser


def dispatch(argv=None) -> int:
    """Parse arguments and run a subcommand, mapping failures to exit codes."""
    try:
        _configure_logging()
        parser = _build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return 0 if e.code in (0, None) else 1
        log.info("command=%s seed=%s", args.command, getattr(args, "seed", "n/a"))
        if getattr(args, "b1", None) is not None and getattr(args, "budget", None) is not None:
            raise McoptError("--b1 and --budget are mutually exclusive")
        return args.handler(args)
    except McoptError as e:
        print(f"mcopt: error: {e}", file=sys.stderr)
        return 1
    except OSError as e:
        print(f"mcopt: error: {e}", file=sys.stderr)
        return 1
    except Exception as e:  # pragma: no cover - defensive
        print(f"mcopt: internal error: {e!r}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
