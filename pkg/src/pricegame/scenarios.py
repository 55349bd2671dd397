"""Canonical scenario builders used by the test suite, docs and benchmarks.

The default market is the two-seller CES economy with budget 2, unit weights
and substitution elasticity 2.5; its symmetric equilibrium price is
``B/(n*w) = 1`` at unit supply, conveniently the log-domain midpoint.
"""

from __future__ import annotations

import math

from .harness import ScenarioConfig, SellerConfig
from .market import CesModel, SmoothingParams

DEFAULT_SIGMA = 2.5
DEFAULT_BUDGET = 2.0

# eps*R = 0.05 with a symmetric-market revenue band [0.8, 1.25].
DEFAULT_SMOOTHING = dict(epsilon=0.04, r_lower=0.8, R_upper=1.25)

# Wide band pinning the demand threshold at 0.9 * supply (eps*r = ln(1/0.9));
# with the revenue-bound split below it also brackets the asymmetric-market
# optima of the contrast scenario.
WIDE_BAND_SMOOTHING = dict(
    epsilon=math.log(1.0 / 0.9) / 0.3, r_lower=0.3, R_upper=1.8
)


def _model(weights=(1.0, 1.0)):
    return CesModel(budget=DEFAULT_BUDGET, weights=weights, sigma=DEFAULT_SIGMA)


def static_ogd_scenario(horizon: int, seed: int = 0) -> ScenarioConfig:
    """Both sellers run OGD with sign feedback on the static default market."""
    return ScenarioConfig(
        model=_model(),
        sellers=(
            SellerConfig("ogd", "adjusted", "inverse-sqrt"),
            SellerConfig("ogd", "adjusted", "inverse-sqrt"),
        ),
        horizon=horizon,
        supply_kind="static",
        supply_base=(1.0, 1.0),
        supply_params={},
        seed=seed,
    )


def optimistic_pair_scenario(algorithm: str, horizon: int, seed: int = 0) -> ScenarioConfig:
    """Both sellers run the same optimistic learner with smoothed feedback."""
    return ScenarioConfig(
        model=_model(),
        sellers=(
            SellerConfig(algorithm, "smoothed", "fixed-horizon"),
            SellerConfig(algorithm, "smoothed", "fixed-horizon"),
        ),
        horizon=horizon,
        supply_kind="static",
        supply_base=(1.0, 1.0),
        supply_params={},
        smoothing=SmoothingParams(**DEFAULT_SMOOTHING),
        seed=seed,
    )


def ogd_vs_omd_scenario(horizon: int = 10_000, seed: int = 0) -> ScenarioConfig:
    """Seller 0 runs OGD (sign feedback), seller 1 OMD (smoothed feedback).

    Demand threshold 0.9 * supply; the OGD price hunts around the revenue
    kink while the OMD price settles at the smoothed optimum.  The OGD
    seller carries a small CES weight: with equal weights its step-size-sized
    oscillation transmits through the cross-price elasticity and shakes the
    OMD seller's gradient hard enough to blur the contrast between the two
    algorithms.
    """
    return ScenarioConfig(
        model=_model(weights=(0.2, 1.0)),
        sellers=(
            SellerConfig("ogd", "adjusted", "inverse-sqrt"),
            SellerConfig("omd", "smoothed", "fixed-horizon"),
        ),
        horizon=horizon,
        supply_kind="static",
        supply_base=(1.0, 1.0),
        supply_params={},
        smoothing=SmoothingParams(**WIDE_BAND_SMOOTHING),
        seed=seed,
    )


def drift_scenario(
    total_log_change: float,
    horizon: int,
    seed: int = 0,
    jitter: float = 0.25,
) -> ScenarioConfig:
    """OMD pair tracking a geometric ramp in the supply of good 0.

    ``total_log_change`` is the 1-norm log-supply drift W_T, applied entirely
    to the first good (symmetric drift washes out of per-seller revenue
    through the CES budget identity, so it exercises nothing).  Initial
    prices are jittered so seeds produce distinct transients; the wide
    smoothing band keeps the step size in the regime where the optimistic
    pair converges rather than limit-cycles.
    """
    return ScenarioConfig(
        model=_model(),
        sellers=(
            SellerConfig("omd", "smoothed", "fixed-horizon"),
            SellerConfig("omd", "smoothed", "fixed-horizon"),
        ),
        horizon=horizon,
        supply_kind="drift",
        supply_base=(1.0, 1.0),
        supply_params={"log_change": [total_log_change, 0.0]},
        smoothing=SmoothingParams(**WIDE_BAND_SMOOTHING),
        seed=seed,
        initial_price_jitter=jitter,
    )


def random_walk_scenario(step_cap: float, horizon: int, seed: int = 0) -> ScenarioConfig:
    """OMD pair on a bounded random-walk supply schedule."""
    return ScenarioConfig(
        model=_model(),
        sellers=(
            SellerConfig("omd", "smoothed", "fixed-horizon"),
            SellerConfig("omd", "smoothed", "fixed-horizon"),
        ),
        horizon=horizon,
        supply_kind="random-walk",
        supply_base=(1.0, 1.0),
        supply_params={"step_cap": step_cap},
        smoothing=SmoothingParams(**WIDE_BAND_SMOOTHING),
        seed=seed,
    )
