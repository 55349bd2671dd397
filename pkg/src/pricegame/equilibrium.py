"""Walrasian equilibrium computation and supply-drift metrics.

The solver is damped tatonnement in log-price space: prices adjust
proportionally to log excess demand, which keeps them positive by
construction and converges for gross-substitutes CES markets.  Iso-elastic
demand with two goods has a singular clearing system (uniform price shifts
leave excess demand unchanged), so equilibrium requests for that
configuration are rejected; dynamic benchmarks should use CES models.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import ConfigError, ConvergenceError, UnsupportedModelError
from .market import DEFAULT_PRICE_DOMAIN, DemandModel, PricePoint

_BOUNDARY_REL = 1e-12


def kernel_model_args(model: DemandModel):
    """Unpack a demand model into the flat argument tuple the kernels take."""
    empty = np.empty(0, dtype=np.float64)
    if model.kind == "ces":
        return (0, model.budget, model.weight_pows(), model.sigma, empty, 0.0)
    return (1, 0.0, empty, 0.0, np.log(np.asarray(model.scales)), model.elasticity)


@dataclass(frozen=True)
class EquilibriumSolverConfig:
    """Damping, stopping tolerance (inf-norm on log excess demand), budget."""

    kappa: float | None = None
    tol: float = 1e-8
    max_iter: int = 100_000

    def __post_init__(self):
        if self.kappa is not None and not self.kappa > 0:
            raise ConfigError("damping kappa must be positive")
        if not self.tol > 0:
            raise ConfigError("tolerance must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be at least 1")

    def effective_kappa(self, model: DemandModel) -> float:
        if self.kappa is not None:
            return self.kappa
        return 0.5 / model.elasticity_nominal


@dataclass(frozen=True)
class SupplySchedule:
    """A per-round supply matrix together with the generator that made it."""

    w: np.ndarray
    kind: str
    params: dict = field(default_factory=dict)
    seed: int | None = None

    def __post_init__(self):
        w = np.ascontiguousarray(self.w, dtype=np.float64)
        if w.ndim != 2:
            raise ConfigError("supply schedule must be a (T, n) matrix")
        if not np.all(w > 0):
            raise ConfigError("supplies must be strictly positive")
        object.__setattr__(self, "w", w)

    @property
    def horizon(self) -> int:
        return self.w.shape[0]

    @property
    def n(self) -> int:
        return self.w.shape[1]

    def variation(self) -> float:
        return supply_variation(self)


def supply_variation(schedule) -> float:
    """Cumulative 1-norm drift of log supply: sum_t ||ln w^t - ln w^{t-1}||_1."""
    w = schedule.w if isinstance(schedule, SupplySchedule) else np.asarray(schedule, dtype=float)
    if w.ndim != 2 or w.shape[0] < 1:
        raise ConfigError("supply schedule must contain at least one round")
    if w.shape[0] == 1:
        return 0.0
    lw = np.log(w)
    return float(np.sum(np.abs(np.diff(lw, axis=0))))


@dataclass(frozen=True)
class EquilibriumResult:
    prices: PricePoint
    iterations: int
    residual: float


def _check_solvable(model: DemandModel):
    if model.kind == "iso" and model.n == 2:
        raise UnsupportedModelError(
            "two-good iso-elastic markets have a singular clearing system; "
            "equilibrium benchmarks require a CES model"
        )


def tatonnement(
    model: DemandModel,
    w,
    cfg: EquilibriumSolverConfig | None = None,
    p0=None,
    domain=DEFAULT_PRICE_DOMAIN,
    backend=None,
) -> EquilibriumResult:
    """Solve for market-clearing prices of one supply vector.

    Raises ``ConvergenceError`` when the iteration budget runs out; the error
    reports the last residual and whether the iterate was pinned at the price
    domain boundary (equilibrium outside the domain).
    """
    _check_solvable(model)
    w = np.ascontiguousarray(w, dtype=np.float64)
    if w.shape != (model.n,) or not np.all(w > 0):
        raise ConfigError("supply must be a strictly positive length-n vector")
    cfg = cfg or EquilibriumSolverConfig()
    lo, hi = math.log(domain[0]), math.log(domain[1])
    if p0 is None:
        pt = np.full(model.n, 0.5 * (lo + hi), dtype=np.float64)
    else:
        pt = np.ascontiguousarray(p0, dtype=np.float64).copy()
    kern = _kernels.get_backend(backend)
    iters, resid, ok = kern.tatonnement(
        *kernel_model_args(model),
        model.n,
        w,
        cfg.effective_kappa(model),
        cfg.tol,
        cfg.max_iter,
        lo,
        hi,
        pt,
    )
    if not ok:
        pad = _BOUNDARY_REL * (hi - lo)
        clipped = bool(np.any(pt <= lo + pad) or np.any(pt >= hi - pad))
        msg = f"tatonnement did not reach tol={cfg.tol:g} in {iters} iterations (residual {resid:.3g})"
        if clipped:
            msg += "; iterate pinned at the price-domain boundary (equilibrium may lie outside)"
        raise ConvergenceError(msg, residual=resid, iterations=iters, clipped=clipped)
    return EquilibriumResult(
        prices=PricePoint.from_log_prices(pt), iterations=iters, residual=resid
    )


@dataclass(frozen=True)
class EquilibriumSequence:
    log_prices: np.ndarray
    prices: np.ndarray
    residuals: np.ndarray
    iterations: np.ndarray


def equilibrium_sequence(
    model: DemandModel,
    schedule: SupplySchedule,
    cfg: EquilibriumSolverConfig | None = None,
    domain=DEFAULT_PRICE_DOMAIN,
    backend=None,
) -> EquilibriumSequence:
    """Per-round clearing prices, each solve warm-started from the previous one."""
    _check_solvable(model)
    cfg = cfg or EquilibriumSolverConfig()
    T, n = schedule.horizon, schedule.n
    if n != model.n:
        raise ConfigError("schedule width does not match the model")
    lp = np.empty((T, n))
    resid = np.empty(T)
    iters = np.empty(T, dtype=np.int64)
    warm = None
    for t in range(T):
        try:
            res = tatonnement(model, schedule.w[t], cfg, p0=warm, domain=domain, backend=backend)
        except ConvergenceError as err:
            err.args = (f"round {t + 1}: {err.args[0]}",)
            raise
        lp[t] = res.prices.p_tilde
        resid[t] = res.residual
        iters[t] = res.iterations
        warm = res.prices.p_tilde
    return EquilibriumSequence(
        log_prices=lp, prices=np.exp(lp), residuals=resid, iterations=iters
    )


@dataclass(frozen=True)
class EquilibriumShift:
    """Measured equilibrium displacement against the supply-drift bound."""

    shift: float
    bound: float
    slack: float
    passed: bool


def equilibrium_shift_check(
    model: DemandModel,
    w_old,
    w_new,
    cfg: EquilibriumSolverConfig | None = None,
    domain=DEFAULT_PRICE_DOMAIN,
    backend=None,
) -> EquilibriumShift:
    """Check max_j |d log p_j^eq| <= ||d log w||_1 (solver-tolerance slack 10*tol)."""
    cfg = cfg or EquilibriumSolverConfig()
    old = tatonnement(model, w_old, cfg, domain=domain, backend=backend)
    new = tatonnement(model, w_new, cfg, p0=old.prices.p_tilde, domain=domain, backend=backend)
    shift = float(np.max(np.abs(new.prices.p_tilde - old.prices.p_tilde)))
    bound = float(
        np.sum(np.abs(np.log(np.asarray(w_new, float)) - np.log(np.asarray(w_old, float))))
    )
    slack = 10.0 * cfg.tol
    return EquilibriumShift(shift=shift, bound=bound, slack=slack, passed=shift <= bound + slack)
