"""Multi-seller dynamic pricing: demand oracles, no-regret learners,
equilibrium benchmarks and regret analysis."""

from ._version import __version__

from .errors import (
    AnchorError,
    ConfigError,
    ConvergenceError,
    DomainError,
    FeedbackError,
    PricegameError,
    UnsupportedModelError,
)
from .market import (
    CesModel,
    DemandModel,
    IsoElasticModel,
    PricePoint,
    SmoothingParams,
    adjusted_gradient,
    elasticity_fd,
    exact_log_gradient,
    log_revenue,
    revenue,
    smoothed_curve,
    smoothed_gradient,
    smoothed_log_revenue,
)
from .learners import (
    LearnerState,
    StepSchedule,
    feed,
    make_schedule,
    new_learner,
    ogd_step,
    omd_step,
    oftrl_step,
    play,
)
from .equilibrium import (
    EquilibriumSolverConfig,
    SupplySchedule,
    equilibrium_sequence,
    equilibrium_shift_check,
    supply_variation,
    tatonnement,
)
from .regret import (
    BestFixedPrice,
    RegretReport,
    Trace,
    approx_regret,
    best_fixed_price,
    build_report,
    drvu_check,
    drvu_constants,
    dynamic_regret,
    fit_scaling_exponent,
    rvu_check,
    rvu_constants,
    stability_check,
    static_regret,
)
from .harness import (
    ScenarioConfig,
    SellerConfig,
    load_run,
    make_supply_schedule,
    run_scenario,
    save_run,
)
from .checks import run_property_checks
