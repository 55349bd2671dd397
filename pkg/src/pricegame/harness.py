"""Scenario configuration and deterministic round-loop orchestration.

A scenario is a JSON-serializable document: demand model, per-seller learner
and feedback channel, supply schedule, horizon, smoothing parameters, price
domain and seed.  ``run_scenario`` materializes the supply schedule and
initial prices from the seed, then hands the whole round loop to one of the
kernels (compiled or pure Python); the protocol per round is
simultaneous-move: every seller posts a price, demand realizes at the joint
price vector, supply caps revenue, and each seller's configured feedback
channel dispatches exactly one scalar gradient back to its learner.

Randomness only enters through the supply schedule and optional initial-price
jitter, each driven by its own child of the scenario seed, so a (config,
seed) pair pins the trace bit-for-bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels, learners, market
from ._version import __version__
from .equilibrium import SupplySchedule, kernel_model_args
from .errors import ConfigError
from .market import CesModel, DemandModel, IsoElasticModel, SmoothingParams
from .regret import Trace

_ALGO_CODE = {"ogd": 0, "omd": 1, "oftrl": 2}
_FEEDBACK_CODE = {"exact": 0, "adjusted": 1, "smoothed": 2}
_SCHED_CODE = {"inverse-sqrt": 0, "fixed-horizon": 1}
_DEFAULT_SCHEDULE = {"ogd": "inverse-sqrt", "omd": "fixed-horizon", "oftrl": "fixed-horizon"}

MANIFEST_NAME = "manifest.json"
TRACE_NAME = "trace.csv"


def _reject_unknown(d: dict, allowed, where: str):
    unknown = set(d) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown key(s) {sorted(unknown)} in {where}")


@dataclass(frozen=True)
class SellerConfig:
    algorithm: str
    feedback: str
    schedule: str
    initial_price: float | None = None

    @classmethod
    def from_dict(cls, d: dict, idx: int) -> "SellerConfig":
        where = f"sellers[{idx}]"
        _reject_unknown(d, ("algorithm", "feedback", "schedule", "initial_price"), where)
        algo = d.get("algorithm")
        if algo not in _ALGO_CODE:
            raise ConfigError(f"{where}: algorithm must be one of {sorted(_ALGO_CODE)}")
        fb = d.get("feedback")
        if fb not in _FEEDBACK_CODE:
            raise ConfigError(f"{where}: feedback must be one of {sorted(_FEEDBACK_CODE)}")
        sched = d.get("schedule", _DEFAULT_SCHEDULE[algo])
        if sched not in _SCHED_CODE:
            raise ConfigError(f"{where}: schedule must be one of {sorted(_SCHED_CODE)}")
        p0 = d.get("initial_price")
        if p0 is not None and not float(p0) > 0:
            raise ConfigError(f"{where}: initial_price must be positive")
        return cls(algorithm=algo, feedback=fb, schedule=sched,
                   initial_price=None if p0 is None else float(p0))

    def to_dict(self) -> dict:
        out = {"algorithm": self.algorithm, "feedback": self.feedback, "schedule": self.schedule}
        if self.initial_price is not None:
            out["initial_price"] = self.initial_price
        return out


def _model_from_dict(d: dict) -> DemandModel:
    kind = d.get("kind")
    if kind == "ces":
        _reject_unknown(d, ("kind", "budget", "weights", "sigma", "rho"), "model")
        if ("sigma" in d) == ("rho" in d):
            raise ConfigError("CES model takes exactly one of 'sigma' or 'rho'")
        sigma = float(d["sigma"]) if "sigma" in d else 1.0 / (1.0 - float(d["rho"]))
        return CesModel(budget=float(d["budget"]), weights=tuple(d["weights"]), sigma=sigma)
    if kind == "iso":
        _reject_unknown(d, ("kind", "scales", "elasticity"), "model")
        return IsoElasticModel(scales=tuple(d["scales"]), elasticity=float(d["elasticity"]))
    raise ConfigError("model.kind must be 'ces' or 'iso'")


def _model_to_dict(model: DemandModel) -> dict:
    if model.kind == "ces":
        return {"kind": "ces", "budget": model.budget,
                "weights": list(model.weights), "sigma": model.sigma}
    return {"kind": "iso", "scales": list(model.scales), "elasticity": model.elasticity}


def make_supply_schedule(kind: str, base, T: int, seed=None, **params) -> SupplySchedule:
    """Generate a reproducible (T, n) supply schedule.

    Kinds: ``static`` (constant), ``drift`` (geometric ramp: log supply moves
    linearly by ``log_change`` between rounds ``start`` and ``end``), and
    ``random-walk`` (log-space steps uniform in [-step_cap, +step_cap]).
    """
    base = np.atleast_1d(np.asarray(base, dtype=float))
    if np.any(base <= 0):
        raise ConfigError("base supply must be strictly positive")
    n = base.shape[0]
    if T < 0:
        raise ConfigError("horizon must be nonnegative")
    lw = np.tile(np.log(base), (T, 1))
    if kind == "static":
        pass
    elif kind == "drift":
        change = np.broadcast_to(np.asarray(params.get("log_change", 0.0), float), (n,))
        start = int(params.get("start", 1))
        end = int(params.get("end", T))
        if T > 0 and not 1 <= start <= end <= T:
            raise ConfigError("drift window must satisfy 1 <= start <= end <= T")
        if T > 0:
            rounds = np.arange(1, T + 1)
            if end > start:
                frac = np.clip((rounds - start) / (end - start), 0.0, 1.0)
            else:
                frac = (rounds >= start).astype(float)
            lw = lw + frac[:, None] * change[None, :]
    elif kind == "random-walk":
        cap = float(params.get("step_cap", 0.0))
        if cap < 0:
            raise ConfigError("random-walk step cap must be nonnegative")
        rng = np.random.default_rng(seed)
        steps = rng.uniform(-cap, cap, size=(max(T - 1, 0), n))
        if T > 1:
            lw[1:] += np.cumsum(steps, axis=0)
    else:
        raise ConfigError(f"unknown supply kind {kind!r}")
    return SupplySchedule(w=np.exp(lw), kind=kind, params=dict(params), seed=seed)


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated, JSON-round-trippable description of one experiment."""

    model: DemandModel
    sellers: tuple
    horizon: int
    supply_kind: str
    supply_base: tuple
    supply_params: dict
    price_domain: tuple = market.DEFAULT_PRICE_DOMAIN
    smoothing: SmoothingParams | None = None
    seed: int = 0
    initial_price_jitter: float = 0.0

    def __post_init__(self):
        n = self.model.n
        if len(self.sellers) != n:
            raise ConfigError(f"model has {n} goods but {len(self.sellers)} sellers configured")
        if len(self.supply_base) != n:
            raise ConfigError("supply base length must match the seller count")
        if self.horizon < 0:
            raise ConfigError("horizon must be nonnegative")
        lo, hi = self.price_domain
        if not 0 < lo < hi:
            raise ConfigError("price domain must satisfy 0 < p_min < p_max")
        if self.initial_price_jitter < 0:
            raise ConfigError("initial price jitter must be nonnegative")
        if self.smoothing is not None and self.smoothing.eps_R >= 1.0:
            raise ConfigError(
                f"epsilon * R_upper = {self.smoothing.eps_R:g} >= 1: "
                "the approximate-regret discount (1 - eps*R) degenerates"
            )
        for idx, s in enumerate(self.sellers):
            if s.feedback == "exact" and self.model.kind != "iso":
                raise ConfigError(
                    f"sellers[{idx}]: exact feedback needs a constant-elasticity model"
                )
            if s.feedback == "smoothed" and self.smoothing is None:
                raise ConfigError(f"sellers[{idx}]: smoothed feedback needs smoothing parameters")
            if s.schedule == "fixed-horizon" and self.smoothing is None:
                raise ConfigError(
                    f"sellers[{idx}]: the fixed-horizon step size needs smoothing parameters"
                )
            if s.algorithm in ("omd", "oftrl") and s.schedule != "fixed-horizon":
                raise ConfigError(
                    f"sellers[{idx}]: optimistic learners require the fixed-horizon schedule"
                )
            if s.initial_price is not None and not lo <= s.initial_price <= hi:
                raise ConfigError(f"sellers[{idx}]: initial_price outside the price domain")

    @property
    def n(self) -> int:
        return self.model.n

    @property
    def log_domain(self):
        return math.log(self.price_domain[0]), math.log(self.price_domain[1])

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioConfig":
        _reject_unknown(
            d,
            ("model", "sellers", "horizon", "supply", "price_domain",
             "smoothing", "seed", "initial_price_jitter"),
            "scenario",
        )
        for key in ("model", "sellers", "horizon", "supply"):
            if key not in d:
                raise ConfigError(f"scenario is missing required key {key!r}")
        model = _model_from_dict(d["model"])
        sellers = tuple(
            SellerConfig.from_dict(s, idx) for idx, s in enumerate(d["sellers"])
        )
        sup = dict(d["supply"])
        _reject_unknown(
            sup, ("kind", "base", "log_change", "start", "end", "step_cap"), "supply"
        )
        kind = sup.pop("kind", None)
        if kind not in ("static", "drift", "random-walk"):
            raise ConfigError("supply.kind must be 'static', 'drift' or 'random-walk'")
        base = sup.pop("base", None)
        if base is None:
            raise ConfigError("supply.base is required")
        base = tuple(float(v) for v in (base if isinstance(base, (list, tuple)) else [base] * model.n))
        smoothing = None
        if d.get("smoothing") is not None:
            sm = d["smoothing"]
            _reject_unknown(sm, ("epsilon", "r_lower", "R_upper"), "smoothing")
            try:
                smoothing = SmoothingParams(
                    epsilon=float(sm["epsilon"]),
                    r_lower=float(sm["r_lower"]),
                    R_upper=float(sm["R_upper"]),
                )
            except KeyError as k:
                raise ConfigError(f"smoothing is missing key {k}") from None
        domain = tuple(float(v) for v in d.get("price_domain", market.DEFAULT_PRICE_DOMAIN))
        if len(domain) != 2:
            raise ConfigError("price_domain must be [p_min, p_max]")
        return cls(
            model=model,
            sellers=sellers,
            horizon=int(d["horizon"]),
            supply_kind=kind,
            supply_base=base,
            supply_params=sup,
            price_domain=domain,
            smoothing=smoothing,
            seed=int(d.get("seed", 0)),
            initial_price_jitter=float(d.get("initial_price_jitter", 0.0)),
        )

    @classmethod
    def from_json_file(cls, path) -> "ScenarioConfig":
        with open(path) as fh:
            return cls.from_dict(json.load(fh))

    def to_dict(self) -> dict:
        out = {
            "model": _model_to_dict(self.model),
            "sellers": [s.to_dict() for s in self.sellers],
            "horizon": self.horizon,
            "supply": {"kind": self.supply_kind, "base": list(self.supply_base), **self.supply_params},
            "price_domain": list(self.price_domain),
            "seed": self.seed,
            "initial_price_jitter": self.initial_price_jitter,
        }
        if self.smoothing is not None:
            out["smoothing"] = {
                "epsilon": self.smoothing.epsilon,
                "r_lower": self.smoothing.r_lower,
                "R_upper": self.smoothing.R_upper,
            }
        return out

    def step_schedule(self, seller: int) -> learners.StepSchedule:
        s = self.sellers[seller]
        if s.schedule == "inverse-sqrt":
            return learners.make_schedule("inverse-sqrt")
        sp = self.smoothing
        return learners.make_schedule(
            "fixed-horizon",
            horizon=self.horizon,
            n_sellers=self.n,
            elasticity=self.model.elasticity_nominal,
            epsilon=sp.epsilon,
            r_lower=sp.r_lower,
        )

    def initial_log_prices(self) -> np.ndarray:
        lo, hi = self.log_domain
        p0 = np.array(
            [
                math.log(s.initial_price) if s.initial_price is not None else 0.5 * (lo + hi)
                for s in self.sellers
            ]
        )
        if self.initial_price_jitter > 0:
            rng = np.random.default_rng(np.random.SeedSequence([self.seed, 1]))
            p0 = p0 + rng.uniform(-self.initial_price_jitter, self.initial_price_jitter, self.n)
        return np.clip(p0, lo, hi)

    def supply_schedule(self) -> SupplySchedule:
        return make_supply_schedule(
            self.supply_kind,
            self.supply_base,
            self.horizon,
            seed=np.random.SeedSequence([self.seed, 0]),
            **self.supply_params,
        )


def run_scenario(config: ScenarioConfig, backend=None) -> Trace:
    """Run the full round loop; deterministic given (config, seed)."""
    T, n = config.horizon, config.n
    schedule = config.supply_schedule()
    p0 = config.initial_log_prices()
    lo, hi = config.log_domain

    algo = np.array([_ALGO_CODE[s.algorithm] for s in config.sellers], dtype=np.int32)
    fb = np.array([_FEEDBACK_CODE[s.feedback] for s in config.sellers], dtype=np.int32)
    sched = np.array([_SCHED_CODE[s.schedule] for s in config.sellers], dtype=np.int32)
    eta_fixed = np.zeros(n)
    for i in range(n):
        if config.sellers[i].schedule == "fixed-horizon":
            eta_fixed[i] = config.step_schedule(i).eta_fixed

    sp = config.smoothing
    eps_r = sp.eps_r if sp is not None else 0.0

    out_p = np.empty((T, n))
    out_x = np.empty((T, n))
    out_rev = np.empty((T, n))
    out_g = np.empty((T, n))
    kern = _kernels.get_backend(backend)
    kern.run_game(
        *kernel_model_args(config.model),
        T,
        n,
        schedule.w,
        algo,
        fb,
        sched,
        eta_fixed,
        config.model.elasticity_nominal,
        eps_r,
        lo,
        hi,
        np.ascontiguousarray(p0),
        out_p,
        out_x,
        out_rev,
        out_g,
    )
    return Trace(
        prices=out_p,
        demands=out_x,
        revenues=out_rev,
        gradients=out_g,
        supplies=schedule.w.copy(),
        scenario=config,
    )


def replay_protocol(config: ScenarioConfig, learner_objects=None):
    """Object-level reference of the round protocol, for tests.

    Drives ``learners.play``/``learners.feed`` style objects through the same
    simultaneous-move loop using the public market functions.  Learners are
    handed nothing but their own scalar gradient, which is what the spy test
    pins down.  Returns (trace-like arrays dict, learner list).
    """
    T, n = config.horizon, config.n
    schedule = config.supply_schedule()
    p0 = config.initial_log_prices()
    lo, hi = config.log_domain
    if learner_objects is None:
        learner_objects = [
            learners.new_learner(
                config.sellers[i].algorithm, config.step_schedule(i), lo, hi, p0[i]
            )
            for i in range(n)
        ]
    sp = config.smoothing
    E = config.model.elasticity_nominal
    out = {k: np.empty((T, n)) for k in ("prices", "demands", "revenues", "gradients")}
    for t in range(T):
        lp = np.array([l.play() for l in learner_objects])
        p = np.exp(lp)
        x = config.model.demand(p)
        w = schedule.w[t]
        for i in range(n):
            chan = config.sellers[i].feedback
            if chan == "exact":
                g = market.exact_log_gradient(config.model, p, i, w[i])
            elif chan == "adjusted":
                g = market.adjusted_gradient(x[i], w[i])
            else:
                g = market.smoothed_gradient(x[i], w[i], E, sp)
            learner_objects[i].feed(g)
            out["gradients"][t, i] = g
        out["prices"][t] = p
        out["demands"][t] = x
        out["revenues"][t] = market.revenue(p, x, w)
    out["supplies"] = schedule.w.copy()
    return out, learner_objects


def save_run(trace: Trace, out_dir, backend_name=None) -> dict:
    """Write trace.csv and manifest.json; returns the manifest dict."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    config = trace.scenario
    manifest = {
        "format": 1,
        "package": "pricegame",
        "version": __version__,
        "backend": backend_name or _kernels.DEFAULT.NAME,
        "config": config.to_dict(),
        "supply_variation": config.supply_schedule().variation(),
    }
    trace.to_csv(out_dir / TRACE_NAME)
    with open(out_dir / MANIFEST_NAME, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def load_run(path) -> Trace:
    """Load a run directory (or a trace.csv path with the manifest alongside)."""
    path = Path(path)
    if path.is_dir():
        trace_path, manifest_path = path / TRACE_NAME, path / MANIFEST_NAME
    else:
        trace_path, manifest_path = path, path.parent / MANIFEST_NAME
    if not manifest_path.exists():
        raise ConfigError(f"no {MANIFEST_NAME} next to {trace_path}")
    with open(manifest_path) as fh:
        manifest = json.load(fh)
    config = ScenarioConfig.from_dict(manifest["config"])
    return Trace.from_csv(trace_path, scenario=config)
