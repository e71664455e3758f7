"""Search-based multi-cloud configuration.

Pick a cloud provider, node type and cluster size that minimize a
workload's runtime or cost, using black-box optimizers driven either over
the whole flattened domain, independently per provider, or through a
successive-elimination bandit over providers.  Benchmarking replays
searches against complete offline lookup tables (real or synthetic).
"""

from .bbo import (
    BboKind,
    CandidateSet,
    SearchTrace,
    bbo_new,
    run_bbo,
    trace_to_csv,
)
from .dataset import (
    ObjectiveTable,
    PriceList,
    Scenario,
    Target,
    derive_cost,
    generate_synthetic,
    load_csv,
    lookup,
    write_csv,
    write_price_csv,
)
from .errors import McoptError, Saturated
from .experiment import (
    AlgorithmSpec,
    BoxStats,
    ExperimentPlan,
    RegretRecord,
    SavingsRecord,
    aggregate,
    box_stats,
    emit_report,
    expected_rs_regret,
    regret,
    run_plan,
    savings_fraction,
    true_minimum,
)
from .multicloud import (
    ArmReport,
    BudgetSchedule,
    MultiCloudResult,
    cb_b1_for_budget,
    cb_total_budget,
    cloudbandit,
    flattened_optimize,
    independent_optimize,
    linear_predict_loo,
)
from .space import (
    ConfigPoint,
    ProviderSpace,
    SearchSpace,
    default_space,
    encode,
    encode_flat,
    enumerate_all,
    enumerate_provider,
    load_space,
    point_from_string,
    point_to_string,
    save_space,
)
from .surrogate import (
    AcquisitionKind,
    acquisition,
    forest_fit,
    forest_predict,
    gp_fit,
    gp_posterior,
    rbf_fit,
    rbf_predict,
)

__version__ = "0.1.0"
