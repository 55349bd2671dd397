"""Demand oracles, revenue evaluation and the gradient feedback channels.

Two demand models are supported:

* ``CesModel`` -- a single representative buyer with budget ``B``, weights
  ``a_i`` and substitution elasticity ``sigma > 1`` (equivalently exponent
  ``rho = 1 - 1/sigma`` in ``(0, 1)``).  Demand is

      x_i(p) = B * a_i^sigma * p_i^(-sigma) / sum_j a_j^sigma * p_j^(1-sigma)

  which exhausts the budget exactly and is homogeneous of degree -1 in
  prices.  Own-price elasticity varies with the price vector and stays in
  ``(1, sigma)`` in magnitude.

* ``IsoElasticModel`` -- log-demand affine in log-prices with constant
  own-price elasticity ``-E`` and cross-price elasticity ``+E`` (``E > 1``):

      ln x_j(p) = ln c_j - E ln p_j + E sum_{i != j} ln p_i.

Each seller i prices a per-round supply ``w_i`` and earns
``p_i * min(x_i(p), w_i)``.  The log-revenue curve in the seller's own
log-price rises with slope 1 while demand is supply-capped and falls with
slope ``1 - E`` once demand drops below supply.  Three feedback channels
expose that gradient to learners:

* exact       -- ``1`` when supply-capped, ``1 - E`` otherwise (iso-elastic
                 models only, where E is a known constant);
* adjusted    -- the model-free sign surrogate ``+1`` / ``-1``;
* smoothed    -- interpolates linearly in log-demand between ``+1`` at
                 ``x = w`` and ``1 - E`` at the threshold
                 ``X = w * exp(-eps * r)``, removing the kink so that the
                 gradient becomes Lipschitz in log-prices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import AnchorError, ConfigError, DomainError, UnsupportedModelError

DEFAULT_PRICE_DOMAIN = (1e-2, 1e2)
SMOOTHED_CURVE_GRID = 20001
FD_STEP = 1e-6


def _as_price_array(p) -> np.ndarray:
    arr = np.asarray(getattr(p, "p", p), dtype=float)
    if arr.ndim != 1:
        raise DomainError("price vector must be one-dimensional")
    if not np.all(arr > 0.0) or not np.all(np.isfinite(arr)):
        raise DomainError("prices must be strictly positive and finite")
    return arr


@dataclass(frozen=True)
class PricePoint:
    """A positive price vector together with its element-wise natural log.

    ``p_tilde`` is always derived as ``log(p)`` at construction, so the two
    representations cannot drift apart.
    """

    p: np.ndarray
    p_tilde: np.ndarray

    @classmethod
    def from_prices(cls, p, domain=None) -> "PricePoint":
        arr = _as_price_array(p)
        if domain is not None:
            lo, hi = domain
            if np.any(arr < lo) or np.any(arr > hi):
                raise DomainError(f"price outside domain [{lo}, {hi}]")
        arr = arr.copy()
        arr.flags.writeable = False
        pt = np.log(arr)
        pt.flags.writeable = False
        return cls(p=arr, p_tilde=pt)

    @classmethod
    def from_log_prices(cls, p_tilde, domain=None) -> "PricePoint":
        return cls.from_prices(np.exp(np.asarray(p_tilde, dtype=float)), domain)

    @property
    def n(self) -> int:
        return self.p.shape[0]


@dataclass(frozen=True)
class CesModel:
    """Representative-buyer CES demand with budget ``budget`` and weights ``weights``."""

    budget: float
    weights: tuple
    sigma: float

    kind = "ces"

    def __post_init__(self):
        object.__setattr__(self, "weights", tuple(float(a) for a in self.weights))
        if len(self.weights) < 2:
            raise ConfigError("CES model needs at least 2 goods")
        if self.budget <= 0 or any(a <= 0 for a in self.weights):
            raise ConfigError("CES budget and weights must be strictly positive")
        if not self.sigma > 1.0:
            raise ConfigError(
                "CES substitution elasticity sigma must exceed 1 "
                "(exponent rho = 1 - 1/sigma must lie in (0, 1))"
            )

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def rho(self) -> float:
        return 1.0 - 1.0 / self.sigma

    @property
    def elasticity_nominal(self) -> float:
        return self.sigma

    def weight_pows(self) -> np.ndarray:
        """a_i^sigma, the only form in which the weights enter demand."""
        return np.asarray(self.weights, dtype=float) ** self.sigma

    def demand(self, p) -> np.ndarray:
        prices = _as_price_array(p)
        if prices.shape[0] != self.n:
            raise DomainError("price vector length does not match model size")
        asig = self.weight_pows()
        denom = np.sum(asig * prices ** (1.0 - self.sigma))
        return self.budget * asig * prices ** (-self.sigma) / denom

    def log_demand(self, p) -> np.ndarray:
        return np.log(self.demand(p))

    def own_demand(self, own_prices, other_prices, i) -> np.ndarray:
        """Demand for good i over an array of own prices, opponents fixed."""
        own = np.asarray(own_prices, dtype=float)
        asig = self.weight_pows()
        others = np.asarray(other_prices, dtype=float)
        opp = np.sum(np.delete(asig, i) * others ** (1.0 - self.sigma))
        return (
            self.budget
            * asig[i]
            * own ** (-self.sigma)
            / (asig[i] * own ** (1.0 - self.sigma) + opp)
        )


@dataclass(frozen=True)
class IsoElasticModel:
    """Constant-elasticity demand: own elasticity -E, cross elasticity +E."""

    scales: tuple
    elasticity: float

    kind = "iso"

    def __post_init__(self):
        object.__setattr__(self, "scales", tuple(float(c) for c in self.scales))
        if len(self.scales) < 2:
            raise ConfigError("iso-elastic model needs at least 2 goods")
        if any(c <= 0 for c in self.scales):
            raise ConfigError("scale constants must be strictly positive")
        if not self.elasticity > 1.0:
            raise ConfigError("elasticity must exceed 1")

    @property
    def n(self) -> int:
        return len(self.scales)

    @property
    def elasticity_nominal(self) -> float:
        return self.elasticity

    def log_demand(self, p) -> np.ndarray:
        prices = _as_price_array(p)
        if prices.shape[0] != self.n:
            raise DomainError("price vector length does not match model size")
        lp = np.log(prices)
        total = np.sum(lp)
        return np.log(self.scales) - self.elasticity * lp + self.elasticity * (total - lp)

    def demand(self, p) -> np.ndarray:
        return np.exp(self.log_demand(p))

    def own_demand(self, own_prices, other_prices, i) -> np.ndarray:
        own = np.asarray(own_prices, dtype=float)
        others = np.asarray(other_prices, dtype=float)
        cross = self.elasticity * np.sum(np.log(others))
        lx = math.log(self.scales[i]) - self.elasticity * np.log(own) + cross
        return np.exp(lx)


DemandModel = Union[CesModel, IsoElasticModel]


@dataclass(frozen=True)
class SmoothingParams:
    """Smoothing constant and the revenue bounds it is calibrated against.

    ``epsilon * r_lower`` is the width (in log-demand) of the band
    ``[X, w]`` over which the smoothed gradient interpolates; the derived
    per-seller threshold is ``X_i = w_i * exp(-epsilon * r_lower)``.
    """

    epsilon: float
    r_lower: float
    R_upper: float

    def __post_init__(self):
        if not self.epsilon > 0.0:
            raise ConfigError("smoothing constant epsilon must be positive (degenerate smoothing)")
        if not 0.0 < self.r_lower <= self.R_upper:
            raise ConfigError("revenue bounds must satisfy 0 < r_lower <= R_upper")

    @property
    def eps_r(self) -> float:
        return self.epsilon * self.r_lower

    @property
    def eps_R(self) -> float:
        return self.epsilon * self.R_upper

    def threshold(self, w_i: float) -> float:
        return w_i / math.exp(self.eps_r)


def revenue(p_i, x_i, w_i):
    """Revenue ``p_i * min(x_i, w_i)``; element-wise on arrays."""
    p_i = np.asarray(p_i, dtype=float)
    x_i = np.asarray(x_i, dtype=float)
    w_i = np.asarray(w_i, dtype=float)
    if np.any(p_i <= 0) or np.any(x_i <= 0) or np.any(w_i <= 0):
        raise DomainError("price, demand and supply must be strictly positive")
    out = p_i * np.minimum(x_i, w_i)
    return float(out) if out.ndim == 0 else out


def log_revenue(p_i, x_i, w_i):
    # Evaluated as log p + log min(x, w): the additive form is the identity
    # the smoothed-curve construction integrates against, so the two curves
    # agree exactly (not just to rounding) where they should coincide.
    p_i = np.asarray(p_i, dtype=float)
    x_i = np.asarray(x_i, dtype=float)
    w_i = np.asarray(w_i, dtype=float)
    if np.any(p_i <= 0) or np.any(x_i <= 0) or np.any(w_i <= 0):
        raise DomainError("price, demand and supply must be strictly positive")
    out = np.log(p_i) + np.log(np.minimum(x_i, w_i))
    return float(out) if out.ndim == 0 else out


def exact_log_gradient(model: DemandModel, p, i: int, w_i: float) -> float:
    """Exact log-revenue gradient for seller i; iso-elastic models only.

    The supply-capped boundary ``x_i = w_i`` belongs to the gradient-1 branch.
    """
    if model.kind != "iso":
        raise UnsupportedModelError(
            "exact gradient requires a constant-elasticity model; "
            "use adjusted_gradient or smoothed_gradient for CES"
        )
    x_i = float(model.demand(p)[i])
    if x_i >= w_i:
        return 1.0
    return 1.0 - model.elasticity


def adjusted_gradient(x_i, w_i):
    """Model-free sign feedback: -1 below supply, +1 at or above it."""
    x_i = np.asarray(x_i, dtype=float)
    w_i = np.asarray(w_i, dtype=float)
    if np.any(x_i <= 0) or np.any(w_i <= 0):
        raise DomainError("demand and supply must be strictly positive")
    out = np.where(x_i >= w_i, 1.0, -1.0)
    return float(out) if out.ndim == 0 else out


def smoothed_gradient(x_i, w_i, elasticity: float, sp: SmoothingParams):
    """Piecewise-linear-in-log-demand surrogate gradient.

    Returns 1 above the supply level, ``1 - E`` below the threshold
    ``X = w * exp(-eps*r)``, and interpolates linearly in ``ln x`` in
    between; continuous at both branch boundaries.
    """
    x_i = np.asarray(x_i, dtype=float)
    w_i = np.asarray(w_i, dtype=float)
    if np.any(x_i <= 0) or np.any(w_i <= 0):
        raise DomainError("demand and supply must be strictly positive")
    t = (np.log(x_i) - np.log(w_i)) / sp.eps_r
    out = np.where(t > 0.0, 1.0, np.where(t < -1.0, 1.0 - elasticity, 1.0 + elasticity * t))
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SmoothedCurve:
    """Actual and smoothed log-revenue for one seller on a log-price grid.

    The smoothed curve integrates the smoothed gradient by trapezoid rule and
    is pinned to the actual curve on the low-demand region ``x <= X`` (there
    the two gradients agree exactly, so the curves coincide); the gap
    ``actual - smoothed`` then accumulates backwards through the band and is
    constant on the supply-capped region.
    """

    p_tilde: np.ndarray
    actual: np.ndarray
    smoothed: np.ndarray
    delta: np.ndarray
    anchor_index: int

    @property
    def gap(self) -> np.ndarray:
        return self.actual - self.smoothed


def smoothed_curve(
    model: DemandModel,
    others,
    i: int,
    w_i: float,
    sp: SmoothingParams,
    elasticity: float | None = None,
    grid_points: int = SMOOTHED_CURVE_GRID,
    domain=DEFAULT_PRICE_DOMAIN,
) -> SmoothedCurve:
    """Tabulate actual and smoothed log-revenue over the whole price domain."""
    if elasticity is None:
        elasticity = model.elasticity_nominal
    others = _as_price_array(others)
    if w_i <= 0:
        raise DomainError("supply must be strictly positive")
    lo, hi = math.log(domain[0]), math.log(domain[1])
    pt = np.linspace(lo, hi, grid_points)
    x = model.own_demand(np.exp(pt), others, i)
    actual = pt + np.log(np.minimum(x, w_i))
    t = (np.log(x) - math.log(w_i)) / sp.eps_r
    delta = np.where(t > 0.0, 1.0, np.where(t < -1.0, 1.0 - elasticity, 1.0 + elasticity * t))

    below = np.nonzero(t <= -1.0)[0]
    if below.size == 0:
        raise AnchorError(
            "demand never falls to the smoothing threshold inside the price "
            "domain; cannot anchor the smoothed curve"
        )
    k0 = int(below[0])

    smoothed = actual.copy()
    if k0 > 0:
        h = (hi - lo) / (grid_points - 1)
        trap = 0.5 * h * (delta[:k0] + delta[1 : k0 + 1])
        smoothed[:k0] = actual[k0] - np.cumsum(trap[::-1])[::-1]
    return SmoothedCurve(p_tilde=pt, actual=actual, smoothed=smoothed, delta=delta, anchor_index=k0)


def smoothed_log_revenue(
    model: DemandModel,
    p_i: float,
    others,
    i: int,
    w_i: float,
    sp: SmoothingParams,
    elasticity: float | None = None,
    grid_points: int = SMOOTHED_CURVE_GRID,
    domain=DEFAULT_PRICE_DOMAIN,
) -> float:
    """Smoothed log-revenue of seller i at price ``p_i``, opponents fixed."""
    if elasticity is None:
        elasticity = model.elasticity_nominal
    if not domain[0] <= p_i <= domain[1]:
        raise DomainError(f"price {p_i} outside domain {domain}")
    curve = smoothed_curve(model, others, i, w_i, sp, elasticity, grid_points, domain)
    q = math.log(p_i)
    x_q = float(model.own_demand(np.array([p_i]), others, i)[0])
    t_q = (math.log(x_q) - math.log(w_i)) / sp.eps_r
    if t_q <= -1.0:
        return log_revenue(p_i, x_q, w_i)
    pt = curve.p_tilde
    h = pt[1] - pt[0]
    j = min(int((q - pt[0]) / h), len(pt) - 2)
    if q >= pt[j + 1]:
        j += 1
    if q == pt[j]:
        return float(curve.smoothed[j])
    d_q = smoothed_gradient(x_q, w_i, elasticity, sp)
    return float(curve.smoothed[j + 1] - (pt[j + 1] - q) * 0.5 * (d_q + curve.delta[j + 1]))


def elasticity_fd(model: DemandModel, p, i: int, j: int, step: float = FD_STEP) -> float:
    """Central finite-difference estimate of d ln x_j / d ln p_i."""
    prices = _as_price_array(p)
    if step <= 0 or 1.0 + step == 1.0:
        raise DomainError("finite-difference step underflows")
    up = prices.copy()
    dn = prices.copy()
    up[i] = math.exp(math.log(prices[i]) + step)
    dn[i] = math.exp(math.log(prices[i]) - step)
    return float((model.log_demand(up)[j] - model.log_demand(dn)[j]) / (2.0 * step))


@dataclass(frozen=True)
class PropertyCheck:
    """Outcome of a sampled structural-inequality check."""

    name: str
    passed: bool
    samples: int
    failures: int
    worst_margin: float
    detail: str = ""


def smoothing_cost_check(
    model: DemandModel,
    i: int,
    w_i: float,
    sp: SmoothingParams,
    samples: int = 1000,
    seed: int = 0,
    rel_slack: float = 1e-3,
    domain=DEFAULT_PRICE_DOMAIN,
    grid_points: int = SMOOTHED_CURVE_GRID,
) -> PropertyCheck:
    """Sample random opponent/own prices and check 0 <= actual - smoothed <= eps*r.

    The branch slopes behind the bound hold exactly only for iso-elastic
    demand, so callers should pass an iso-elastic model.
    """
    rng = np.random.default_rng(seed)
    lo, hi = math.log(domain[0]), math.log(domain[1])
    bound = sp.eps_r * (1.0 + rel_slack)
    threshold = sp.threshold(w_i)
    failures = 0
    rejected = 0
    worst = -math.inf
    done = 0
    while done < samples:
        # The smoothed curve only exists when demand crosses the threshold
        # inside the domain; redraw opponents otherwise.
        others = np.exp(rng.uniform(lo, hi, size=model.n - 1))
        if float(model.own_demand(np.array([domain[1]]), others, i)[0]) > threshold:
            rejected += 1
            if rejected > 100 * samples:
                raise AnchorError("could not sample anchorable opponent prices")
            continue
        p_i = math.exp(rng.uniform(lo, hi))
        x_i = float(model.own_demand(np.array([p_i]), others, i)[0])
        actual = log_revenue(p_i, x_i, w_i)
        sm = smoothed_log_revenue(model, p_i, others, i, w_i, sp, grid_points=grid_points, domain=domain)
        gap = actual - sm
        if gap < 0.0 or gap > bound:
            failures += 1
        worst = max(worst, gap - sp.eps_r, -gap)
        done += 1
    return PropertyCheck(
        name="smoothing-cost",
        passed=failures == 0,
        samples=samples,
        failures=failures,
        worst_margin=worst,
        detail=f"bound eps*r = {sp.eps_r:.6g}, {rejected} unanchorable draws redrawn",
    )


def lipschitz_check(
    model: DemandModel,
    i: int,
    w_i: float,
    sp: SmoothingParams,
    samples: int = 1000,
    seed: int = 0,
    rel_slack: float = 1e-3,
    domain=DEFAULT_PRICE_DOMAIN,
) -> PropertyCheck:
    """Check |delta(p1) - delta(p2)| <= E^2/(eps*r) * ||log p1 - log p2||_1."""
    rng = np.random.default_rng(seed)
    E = model.elasticity_nominal
    L = E * E / sp.eps_r
    lo, hi = math.log(domain[0]), math.log(domain[1])
    failures = 0
    worst = -math.inf
    for _ in range(samples):
        lp1 = rng.uniform(lo, hi, size=model.n)
        lp2 = rng.uniform(lo, hi, size=model.n)
        d1 = smoothed_gradient(float(model.demand(np.exp(lp1))[i]), w_i, E, sp)
        d2 = smoothed_gradient(float(model.demand(np.exp(lp2))[i]), w_i, E, sp)
        lhs = abs(d1 - d2)
        rhs = L * float(np.sum(np.abs(lp1 - lp2)))
        if lhs > rhs * (1.0 + rel_slack):
            failures += 1
        worst = max(worst, lhs - rhs)
    return PropertyCheck(
        name="lipschitz",
        passed=failures == 0,
        samples=samples,
        failures=failures,
        worst_margin=worst,
        detail=f"L = {L:.6g}",
    )
