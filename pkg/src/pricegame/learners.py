"""Online learners over a one-dimensional log-price interval.

All three algorithms maximize (gradient ascent) and share the squared-distance
regularizer, so every update is a projected gradient step onto the interval
``[lo, hi]``:

* OGD    -- play the current iterate, then step along the observed gradient.
* OMD    -- optimistic mirror descent: keep a secondary iterate ``y`` updated
            with observed gradients, and play ``y + eta * M_t`` where the
            prediction ``M_t`` is the previous gradient (``M_1 = 0``).
* OFTRL  -- optimistic follow-the-regularized-leader: play
            ``p0 + eta_t * (G_{t-1} + M_t)`` where ``G`` accumulates all
            observed gradients.

A learner interacts with the world through exactly two calls per round:
``play(state)`` returns the log-price for the round, ``feed(state, g)``
consumes the scalar gradient feedback.  Nothing else reaches the learner,
which is what keeps the sellers' information sets honest.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import ConfigError, FeedbackError

ALGORITHMS = ("ogd", "omd", "oftrl")
SCHEDULE_KINDS = ("inverse-sqrt", "fixed-horizon")


@dataclass(frozen=True)
class StepSchedule:
    """Per-round step sizes: eta_t = t^(-1/2) or a fixed-horizon constant."""

    kind: str
    eta_fixed: float | None = None

    def __post_init__(self):
        if self.kind not in SCHEDULE_KINDS:
            raise ConfigError(f"unknown schedule kind {self.kind!r}")
        if self.kind == "fixed-horizon":
            if self.eta_fixed is None or not self.eta_fixed > 0:
                raise ConfigError("fixed-horizon schedule needs a positive step size")

    @property
    def constant(self) -> bool:
        return self.kind == "fixed-horizon"

    def eta(self, t: int) -> float:
        if t < 1:
            raise ConfigError("rounds are 1-based")
        if self.kind == "inverse-sqrt":
            return 1.0 / math.sqrt(t)
        return self.eta_fixed


def make_schedule(
    kind: str,
    *,
    horizon: int | None = None,
    n_sellers: int | None = None,
    elasticity: float | None = None,
    epsilon: float | None = None,
    r_lower: float | None = None,
    lipschitz: float | None = None,
) -> StepSchedule:
    """Build a step schedule.

    ``fixed-horizon`` computes ``eta = (L*n)^(-1/2) * T^(-1/4)`` with
    ``L = E^2/(eps*r)``; pass either ``lipschitz`` directly or the triple
    (elasticity, epsilon, r_lower).
    """
    if kind == "inverse-sqrt":
        return StepSchedule(kind="inverse-sqrt")
    if kind != "fixed-horizon":
        raise ConfigError(f"unknown schedule kind {kind!r}")
    if horizon is None or horizon < 1:
        raise ConfigError("fixed-horizon schedule requires the horizon T")
    if n_sellers is None or n_sellers < 1:
        raise ConfigError("fixed-horizon schedule requires the seller count n")
    if lipschitz is None:
        if elasticity is None or epsilon is None or r_lower is None:
            raise ConfigError(
                "fixed-horizon schedule needs lipschitz or (elasticity, epsilon, r_lower)"
            )
        lipschitz = elasticity * elasticity / (epsilon * r_lower)
    if lipschitz <= 0:
        raise ConfigError("gradient Lipschitz constant must be positive")
    eta = (lipschitz * n_sellers) ** -0.5 * horizon ** -0.25
    return StepSchedule(kind="fixed-horizon", eta_fixed=eta)


@dataclass
class LearnerState:
    """Mutable per-seller learner state; step one learner sequentially only.

    ``current`` is the primary iterate (OGD's play, OMD's secondary iterate
    ``y``); ``cum_grad`` is OFTRL's gradient sum; ``last_grad`` doubles as the
    optimistic prediction for the next round.  ``t`` counts completed rounds.
    """

    algorithm: str
    schedule: StepSchedule
    lo: float
    hi: float
    p0: float
    current: float = field(init=False)
    cum_grad: float = field(init=False, default=0.0)
    last_grad: float = field(init=False, default=0.0)
    t: int = field(init=False, default=0)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigError(f"unknown algorithm {self.algorithm!r}")
        if not self.lo < self.hi:
            raise ConfigError("decision domain must have positive width")
        if not self.lo <= self.p0 <= self.hi:
            raise ConfigError("initial log-price outside the decision domain")
        self.current = self.p0

    def _clip(self, v: float) -> float:
        return self.lo if v < self.lo else (self.hi if v > self.hi else v)

    def play(self) -> float:
        return play(self)

    def feed(self, g: float) -> "LearnerState":
        return feed(self, g)


def new_learner(algorithm, schedule, lo, hi, p0=None) -> LearnerState:
    if p0 is None:
        p0 = 0.5 * (lo + hi)
    return LearnerState(algorithm=algorithm, schedule=schedule, lo=lo, hi=hi, p0=p0)


def play(state: LearnerState) -> float:
    """Log-price the learner posts in the upcoming round."""
    t = state.t + 1
    if state.algorithm == "ogd":
        return state.current
    eta = state.schedule.eta(t)
    if state.algorithm == "omd":
        return state._clip(state.current + eta * state.last_grad)
    return state._clip(state.p0 + eta * (state.cum_grad + state.last_grad))


def feed(state: LearnerState, g: float) -> LearnerState:
    """Consume the round's gradient feedback and advance the state."""
    g = float(g)
    if math.isnan(g) or math.isinf(g):
        raise FeedbackError(f"gradient feedback must be finite, got {g}")
    t = state.t + 1
    if state.algorithm in ("ogd", "omd"):
        eta = state.schedule.eta(t)
        state.current = state._clip(state.current + eta * g)
    else:
        state.cum_grad = state.cum_grad + g
    state.last_grad = g
    state.t = t
    return state


def _check_algorithm(state: LearnerState, expected: str):
    if state.algorithm != expected:
        raise ConfigError(f"learner runs {state.algorithm!r}, not {expected!r}")


def ogd_step(state: LearnerState, g: float) -> LearnerState:
    """Projected ascent step: the new iterate is the next round's play."""
    _check_algorithm(state, "ogd")
    return feed(state, g)


def omd_step(state: LearnerState, g: float) -> LearnerState:
    """Update the secondary iterate; ``play`` applies the optimistic shift."""
    _check_algorithm(state, "omd")
    return feed(state, g)


def oftrl_step(state: LearnerState, g: float) -> LearnerState:
    """Accumulate the gradient; ``play`` re-solves the regularized leader."""
    _check_algorithm(state, "oftrl")
    return feed(state, g)
