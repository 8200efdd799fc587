from .tests import (
    StatsError,
    TestResult,
    mann_whitney_u,
    noninferiority_test,
    norm_cdf,
    proportion_ztest,
    spearman,
    welch_t,
)
from .bootstrap import bootstrap_spearman_ci, FdrConfig, fdr_for_bootstrap
from .power import (
    PowerConfig,
    auto_score_equivalence_bound,
    equivalence_bound_search,
    min_annotators,
    power_simulation,
)
from .regress import logistic_regression, ordered_probit

__all__ = [
    "StatsError",
    "TestResult",
    "mann_whitney_u",
    "noninferiority_test",
    "norm_cdf",
    "proportion_ztest",
    "spearman",
    "welch_t",
    "bootstrap_spearman_ci",
    "FdrConfig",
    "fdr_for_bootstrap",
    "PowerConfig",
    "power_simulation",
    "min_annotators",
    "equivalence_bound_search",
    "auto_score_equivalence_bound",
    "logistic_regression",
    "ordered_probit",
]
