"""Randomization inference for conditional independence of outcomes and
treatments given covariates, with estimated assignment mechanisms and a
kernel-smoothed sensitivity analysis for unobserved confounding."""

from .assignment import (
    BernoulliDesign,
    CompleteRandomization,
    Dataset,
    FittedLotteryModel,
    LotterySampler,
    NullOutcomeModel,
    SensitivitySampler,
    fit_lottery_model,
    fit_null_outcome_model,
)
from .engine import (
    DecisionRule,
    FrtResult,
    build_decision_rule,
    frt_p_value,
    frt_p_value_exact,
)
from .errors import (
    DataIntegrityError,
    DegenerateGroupsError,
    DegenerateResidualError,
    DegenerateResponseError,
    DomainError,
    EmptyDatasetError,
    FrtError,
    InsufficientDataError,
    SchemaError,
    SeparationError,
    SingularDesignError,
    UndefinedWindowError,
    UnsupportedDesignError,
)
from .io import AnalysisConfig, ingest_csv, load_config, run_checks, run_sensitivity, run_test
from .sensitivity import (
    OverturnResult,
    SensitivityCurve,
    build_sensitivity_curve,
    minimal_overturn,
    nw_smooth,
    smooth_on_grid,
)
from .statistics import (
    BayesSpec,
    TestStatistic,
    diff_in_means,
    t_bf_conjugate,
    t_pos_conjugate,
    t_pos_linear,
)
from .stats import (
    OlsFit,
    ProbitFit,
    RngStream,
    normal_cdf,
    normal_quantile,
    normal_sample,
    ols_fit,
    probit_fit,
)
from .validation import (
    BayesPowerResult,
    DiscreteCausalWorld,
    Theorem1Check,
    check_theorem1,
    confounded_witness,
    random_unconfounded_world,
    run_suite,
    simulate_bayes_power,
    simulate_type_i_estimated_lottery,
    simulate_type_i_known_design,
    simulate_type_i_sensitivity,
)

__version__ = "0.1.0"
