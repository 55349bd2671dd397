"""Traces, benchmarks, regret curves and trace-level property checks.

The ``Trace`` is the single source for all analysis: per-round prices,
demands, revenues, feedback gradients and supplies for every seller.  The
analyzer side holds the demand model (through the scenario attached to the
trace) and may therefore evaluate counterfactual revenue at prices the
learners never played; learners themselves only ever saw their gradient
channel.

Benchmarks follow the hindsight convention of maximizing cumulative
*log*-revenue (a raw-revenue mode exists but the revenue objective need not
be concave, so its optimizer is less interpretable).  Regret curves are always
reported in actual revenue units.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import equilibrium as eq
from . import market
from .errors import ConfigError
from .market import SmoothingParams

BENCHMARK_GRID = 10_000
_CHUNK_CELLS = 8_000_000

_COLUMNS = ("price", "demand", "revenue", "gradient", "supply")


@dataclass(frozen=True)
class RoundRecord:
    t: int
    prices: np.ndarray
    demands: np.ndarray
    revenues: np.ndarray
    gradients: np.ndarray
    supplies: np.ndarray


@dataclass
class Trace:
    """Column-major record of a full simulation run plus its scenario."""

    prices: np.ndarray
    demands: np.ndarray
    revenues: np.ndarray
    gradients: np.ndarray
    supplies: np.ndarray
    scenario: object | None = None
    _log_prices: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        shape = self.prices.shape
        for name in ("demands", "revenues", "gradients", "supplies"):
            if getattr(self, name).shape != shape:
                raise ConfigError(f"trace column {name} has mismatched shape")

    @property
    def horizon(self) -> int:
        return self.prices.shape[0]

    @property
    def n(self) -> int:
        return self.prices.shape[1]

    @property
    def log_prices(self) -> np.ndarray:
        if self._log_prices is None:
            self._log_prices = np.log(self.prices)
        return self._log_prices

    @property
    def model(self):
        if self.scenario is None:
            raise ConfigError("trace carries no scenario metadata")
        return self.scenario.model

    def round(self, t: int) -> RoundRecord:
        i = t - 1
        return RoundRecord(
            t=t,
            prices=self.prices[i],
            demands=self.demands[i],
            revenues=self.revenues[i],
            gradients=self.gradients[i],
            supplies=self.supplies[i],
        )

    def slice(self, start: int, stop: int) -> "Trace":
        return Trace(
            prices=self.prices[start:stop],
            demands=self.demands[start:stop],
            revenues=self.revenues[start:stop],
            gradients=self.gradients[start:stop],
            supplies=self.supplies[start:stop],
            scenario=self.scenario,
        )

    def self_check(self, rel_tol: float = 1e-12) -> float:
        """Max relative error between stored revenue and p*min(x, w)."""
        if self.horizon == 0:
            return 0.0
        recomputed = self.prices * np.minimum(self.demands, self.supplies)
        err = np.abs(recomputed - self.revenues) / np.maximum(np.abs(recomputed), 1e-300)
        worst = float(np.max(err))
        if worst >= rel_tol:
            t, i = np.unravel_index(int(np.argmax(err)), err.shape)
            raise ConfigError(
                f"trace self-consistency failed at round {t + 1}, seller {i}: "
                f"stored revenue {self.revenues[t, i]!r} vs recomputed {recomputed[t, i]!r}"
            )
        return worst

    def to_csv(self, path):
        header = ["t"]
        for i in range(self.n):
            header.extend(f"s{i}_{c}" for c in _COLUMNS)
        cols = (self.prices, self.demands, self.revenues, self.gradients, self.supplies)
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(header)
            for t in range(self.horizon):
                row = [str(t + 1)]
                for i in range(self.n):
                    row.extend(repr(float(c[t, i])) for c in cols)
                writer.writerow(row)

    @classmethod
    def from_csv(cls, path, scenario=None) -> "Trace":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        if (len(header) - 1) % len(_COLUMNS) != 0:
            raise ConfigError(f"unrecognized trace header in {path}")
        n = (len(header) - 1) // len(_COLUMNS)
        T = len(rows)
        data = np.empty((T, len(header) - 1))
        for t, row in enumerate(rows):
            data[t] = [float(v) for v in row[1:]]
        data = data.reshape(T, n, len(_COLUMNS))
        return cls(
            prices=np.ascontiguousarray(data[:, :, 0]),
            demands=np.ascontiguousarray(data[:, :, 1]),
            revenues=np.ascontiguousarray(data[:, :, 2]),
            gradients=np.ascontiguousarray(data[:, :, 3]),
            supplies=np.ascontiguousarray(data[:, :, 4]),
            scenario=scenario,
        )


def _require_rounds(trace: Trace):
    if trace.horizon == 0:
        raise ConfigError("empty trace")


def _opponent_terms(trace: Trace, i: int):
    """Per-round opponent aggregates entering seller i's counterfactual demand."""
    model = trace.model
    if model.kind == "ces":
        asig = model.weight_pows()
        pw = trace.prices ** (1.0 - model.sigma) * asig
        return np.sum(pw, axis=1) - pw[:, i]
    lp = trace.log_prices
    return model.elasticity * (np.sum(lp, axis=1) - lp[:, i])


def counterfactual_revenue(trace: Trace, i: int, prices) -> np.ndarray:
    """Per-round revenue had seller i posted ``prices`` (scalar or length-T)."""
    _require_rounds(trace)
    model = trace.model
    own = np.broadcast_to(np.asarray(prices, dtype=float), (trace.horizon,))
    opp = _opponent_terms(trace, i)
    if model.kind == "ces":
        asig = model.weight_pows()
        x = model.budget * asig[i] * own ** (-model.sigma) / (
            asig[i] * own ** (1.0 - model.sigma) + opp
        )
    else:
        x = np.exp(math.log(model.scales[i]) - model.elasticity * np.log(own) + opp)
    return own * np.minimum(x, trace.supplies[:, i])


@dataclass(frozen=True)
class BestFixedPrice:
    price: float
    log_price: float
    value: float
    grid_points: int
    objective: str


def best_fixed_price(
    trace: Trace,
    i: int,
    grid_points: int = BENCHMARK_GRID,
    objective: str = "log",
    domain=None,
) -> BestFixedPrice:
    """Grid-search the best fixed price in hindsight for seller i.

    ``objective="log"`` maximizes cumulative log-revenue (the default
    benchmark); ``"revenue"`` maximizes cumulative raw revenue.  Ties break
    toward the lowest price (first grid maximizer).
    """
    _require_rounds(trace)
    if objective not in ("log", "revenue"):
        raise ConfigError(f"unknown benchmark objective {objective!r}")
    model = trace.model
    if domain is None:
        domain = getattr(trace.scenario, "price_domain", market.DEFAULT_PRICE_DOMAIN)
    lo, hi = math.log(domain[0]), math.log(domain[1])
    grid_lp = np.linspace(lo, hi, grid_points)
    grid_p = np.exp(grid_lp)

    opp = _opponent_terms(trace, i)
    w = trace.supplies[:, i]
    totals = np.zeros(grid_points)
    chunk = max(1, _CHUNK_CELLS // max(trace.horizon, 1))
    if model.kind == "ces":
        asig = model.weight_pows()
        own_neg = asig[i] * model.budget * grid_p ** (-model.sigma)
        own_one = asig[i] * grid_p ** (1.0 - model.sigma)
        for a in range(0, grid_points, chunk):
            b = min(a + chunk, grid_points)
            x = own_neg[a:b, None] / (own_one[a:b, None] + opp[None, :])
            r = grid_p[a:b, None] * np.minimum(x, w[None, :])
            vals = np.log(r) if objective == "log" else r
            totals[a:b] = np.sum(vals, axis=1)
    else:
        lnc = math.log(model.scales[i])
        own_lx = lnc - model.elasticity * grid_lp
        lnw = np.log(w)
        for a in range(0, grid_points, chunk):
            b = min(a + chunk, grid_points)
            lx = own_lx[a:b, None] + opp[None, :]
            lr = grid_lp[a:b, None] + np.minimum(lx, lnw[None, :])
            vals = lr if objective == "log" else np.exp(lr)
            totals[a:b] = np.sum(vals, axis=1)

    k = int(np.argmax(totals))
    return BestFixedPrice(
        price=float(grid_p[k]),
        log_price=float(grid_lp[k]),
        value=float(totals[k]),
        grid_points=grid_points,
        objective=objective,
    )


def static_regret(trace: Trace, i: int, benchmark_price: float) -> np.ndarray:
    """Cumulative revenue gap against one fixed price (revenue units)."""
    _require_rounds(trace)
    bench = counterfactual_revenue(trace, i, benchmark_price)
    return np.cumsum(bench - trace.revenues[:, i])


def _discount(sp: SmoothingParams | None) -> float:
    if sp is None:
        return 0.0
    if sp.eps_R >= 1.0:
        raise ConfigError(f"degenerate discount: epsilon * R_upper = {sp.eps_R:g} >= 1")
    return sp.eps_R


def approx_regret(
    trace: Trace, i: int, benchmark_price: float, sp: SmoothingParams | None
) -> np.ndarray:
    """Cumulative (1 - eps*R)-discounted gap against a fixed benchmark price."""
    _require_rounds(trace)
    d = _discount(sp)
    bench = counterfactual_revenue(trace, i, benchmark_price)
    return np.cumsum((1.0 - d) * bench - trace.revenues[:, i])


def dynamic_regret(
    trace: Trace, i: int, benchmark_prices, sp: SmoothingParams | None
) -> np.ndarray:
    """Discounted cumulative gap against a per-round benchmark price sequence."""
    _require_rounds(trace)
    bench_p = np.asarray(benchmark_prices, dtype=float)
    if bench_p.shape != (trace.horizon,):
        raise ConfigError("benchmark sequence length does not match the trace")
    d = _discount(sp)
    bench = counterfactual_revenue(trace, i, bench_p)
    return np.cumsum((1.0 - d) * bench - trace.revenues[:, i])


# --- learner property checks over traces -----------------------------------


def rvu_constants(algorithm: str, eta: float, lo: float, hi: float):
    """Theoretical (alpha, beta, gamma) with D = squared domain diameter."""
    D = (hi - lo) ** 2
    if algorithm == "oftrl":
        return D / eta, eta, 1.0 / (4.0 * eta)
    if algorithm == "omd":
        return D / eta, eta, 1.0 / (8.0 * eta)
    raise ConfigError(f"no variational regret constants for algorithm {algorithm!r}")


def drvu_constants(eta: float, lo: float, hi: float, y0: float):
    """(alpha, beta, gamma, rho): alpha from the worst Bregman radius at y0."""
    d1 = 0.5 * max(hi - y0, y0 - lo) ** 2
    d2 = hi - lo
    return d1 / eta, eta, 1.0 / (8.0 * eta), d2 / eta


@dataclass(frozen=True)
class VariationCheck:
    lhs: float
    rhs: float
    slack: float
    passed: bool
    comparator: float
    inflation: float


def _variation_terms(trace: Trace, i: int):
    u = trace.gradients[:, i]
    pt = trace.log_prices[:, i]
    du2 = float(np.sum(np.diff(u, prepend=0.0) ** 2))
    dp2 = float(np.sum(np.diff(pt) ** 2))
    return u, pt, du2, dp2


def rvu_check(
    trace: Trace,
    i: int,
    alpha: float,
    beta: float,
    gamma: float,
    comparator: float | None = None,
) -> VariationCheck:
    """Check regret-bounded-by-variation-in-utilities on a seller's trace.

    Verifies sum_t (p* - p_t) u_t <= alpha + beta*sum|u_t - u_{t-1}|^2
    - gamma*sum|p_t - p_{t-1}|^2 in the 1-D absolute-value norms, with
    u_0 = 0 and the play path starting at the first played price.  When no
    comparator is given the worst-case domain endpoint is used, which
    certifies the inequality for every fixed comparator at once (the left
    side is linear in p*).
    """
    _require_rounds(trace)
    u, pt, du2, dp2 = _variation_terms(trace, i)
    if comparator is None:
        lo, hi = trace.scenario.log_domain
        comparator = hi if float(np.sum(u)) >= 0.0 else lo
    lhs = float(np.sum((comparator - pt) * u))
    rhs = alpha + beta * du2 - gamma * dp2
    denom = alpha + beta * du2
    inflation = (lhs + gamma * dp2) / denom if denom > 0 else math.inf
    return VariationCheck(
        lhs=lhs, rhs=rhs, slack=rhs - lhs, passed=lhs <= rhs,
        comparator=comparator, inflation=inflation,
    )


def drvu_check(
    trace: Trace,
    i: int,
    alpha: float,
    beta: float,
    gamma: float,
    rho: float,
    benchmark_log_prices,
) -> VariationCheck:
    """Dynamic variant of ``rvu_check`` with the comparator-path term.

    ``inflation`` reports the factor by which (alpha, beta, rho) would have to
    be scaled for the inequality to hold; <= 1 means it holds as-is.
    """
    _require_rounds(trace)
    bench = np.asarray(benchmark_log_prices, dtype=float)
    if bench.shape != (trace.horizon,):
        raise ConfigError("benchmark sequence length does not match the trace")
    u, pt, du2, dp2 = _variation_terms(trace, i)
    path = float(np.sum(np.abs(np.diff(bench))))
    lhs = float(np.sum((bench - pt) * u))
    rhs = alpha + beta * du2 + rho * path - gamma * dp2
    denom = alpha + beta * du2 + rho * path
    inflation = (lhs + gamma * dp2) / denom if denom > 0 else math.inf
    return VariationCheck(
        lhs=lhs, rhs=rhs, slack=rhs - lhs, passed=lhs <= rhs,
        comparator=math.nan, inflation=inflation,
    )


@dataclass(frozen=True)
class StabilityCheck:
    passed: bool
    worst_step: float
    bound: float


def stability_check(trace: Trace, i: int, eta: float, factor: float = 3.0) -> StabilityCheck:
    """Per-step play stability |p_t - p_{t-1}| <= factor * eta * max|g|.

    With the previous gradient as prediction, the interior step is exactly
    eta * |2 g_{t-1} - g_{t-2}|, so 3 is the tight universal factor; 2
    suffices whenever consecutive gradients do not flip through full swing
    (e.g. fixed-sign streams, or once the smoothed dynamics have settled).
    """
    _require_rounds(trace)
    pt = trace.log_prices[:, i]
    gmax = float(np.max(np.abs(trace.gradients[:, i])))
    worst = float(np.max(np.abs(np.diff(pt)))) if trace.horizon > 1 else 0.0
    bound = factor * eta * gmax
    # iterates carry one extra rounding relative to the eta*g products
    return StabilityCheck(passed=worst <= bound * (1.0 + 1e-12), worst_step=worst, bound=bound)


@dataclass(frozen=True)
class FitResult:
    exponent: float
    r_squared: float
    n_used: int
    n_dropped: int


def fit_scaling_exponent(pairs: Sequence) -> FitResult:
    """Least-squares slope of log regret against log horizon.

    Non-positive regret values cannot enter a log-log fit and are dropped
    (their count is reported); at least three usable horizons spanning two
    decades are required.
    """
    pairs = [(float(T), float(R)) for T, R in pairs]
    usable = [(T, R) for T, R in pairs if R > 0.0]
    dropped = len(pairs) - len(usable)
    if len(usable) < 3:
        raise ConfigError("need at least 3 horizons with positive regret for a fit")
    Ts = np.array([T for T, _ in usable])
    if np.max(Ts) / np.min(Ts) < 99.999:
        raise ConfigError("horizons must span at least two decades")
    x = np.log(Ts)
    y = np.log(np.array([R for _, R in usable]))
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_res = float(np.sum(resid**2))
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 if ss_tot == 0.0 and ss_res < 1e-24 else 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return FitResult(
        exponent=float(slope), r_squared=float(r2), n_used=len(usable), n_dropped=dropped
    )


# --- rolled-up report --------------------------------------------------------


@dataclass
class RegretReport:
    """Benchmark, regret curves and property verdicts for one seller."""

    seller: int
    benchmark_kind: str
    benchmark_prices: np.ndarray
    fixed_benchmark: BestFixedPrice
    regret: np.ndarray
    approx: np.ndarray
    dynamic: np.ndarray | None
    fit: FitResult | None
    verdicts: dict

    def to_csv(self, path, trace: Trace):
        i = self.seller
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["t", "price", "demand", "revenue", "gradient", "benchmark",
                 "regret", "approx_regret", "dynamic_regret"]
            )
            for t in range(trace.horizon):
                row = [
                    str(t + 1),
                    repr(float(trace.prices[t, i])),
                    repr(float(trace.demands[t, i])),
                    repr(float(trace.revenues[t, i])),
                    repr(float(trace.gradients[t, i])),
                    repr(float(self.benchmark_prices[t])),
                    repr(float(self.regret[t])),
                    repr(float(self.approx[t])),
                    repr(float(self.dynamic[t])) if self.dynamic is not None else "",
                ]
                writer.writerow(row)


def build_report(
    trace: Trace,
    i: int,
    benchmark: str = "fixed-price",
    sp: SmoothingParams | None = None,
    grid_points: int = BENCHMARK_GRID,
    eq_cfg: eq.EquilibriumSolverConfig | None = None,
) -> RegretReport:
    """Assemble the per-seller regret report for one of the two benchmarks."""
    if benchmark not in ("fixed-price", "equilibrium-sequence"):
        raise ConfigError(f"unknown benchmark kind {benchmark!r}")
    if sp is None and trace.scenario is not None:
        sp = trace.scenario.smoothing
    best = best_fixed_price(trace, i, grid_points=grid_points)
    regret = static_regret(trace, i, best.price)
    approx = approx_regret(trace, i, best.price, sp)
    dynamic = None
    bench_prices = np.full(trace.horizon, best.price)
    if benchmark == "equilibrium-sequence":
        schedule = eq.SupplySchedule(w=trace.supplies, kind="trace", params={})
        seq = eq.equilibrium_sequence(trace.model, schedule, eq_cfg)
        bench_prices = seq.prices[:, i]
        dynamic = dynamic_regret(trace, i, bench_prices, sp)
    return RegretReport(
        seller=i,
        benchmark_kind=benchmark,
        benchmark_prices=bench_prices,
        fixed_benchmark=best,
        regret=regret,
        approx=approx,
        dynamic=dynamic,
        fit=None,
        verdicts={},
    )
