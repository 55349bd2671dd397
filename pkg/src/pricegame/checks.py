"""Trace-level property verdicts, shared by the check and report commands.

Each property either passes, fails, or is skipped when the scenario does not
support it (e.g. equilibrium checks need a CES model, curve checks need the
constant-elasticity branch slopes).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import equilibrium as eq
from . import market, regret
from .errors import ConfigError, PricegameError
from .regret import Trace

ALL_PROPERTIES = (
    "self-consistency",
    "rvu",
    "drvu",
    "smoothing-cost",
    "lipschitz",
    "stability",
    "equilibrium-shift",
)


@dataclass(frozen=True)
class PropertyVerdict:
    name: str
    scope: str
    status: str  # "pass" | "fail" | "skip"
    detail: str = ""

    @property
    def failed(self) -> bool:
        return self.status == "fail"


def _verdict(name, scope, passed, detail=""):
    return PropertyVerdict(name, scope, "pass" if passed else "fail", detail)


def run_property_checks(
    trace: Trace,
    properties=None,
    eq_cfg: eq.EquilibriumSolverConfig | None = None,
    samples: int = 200,
    seed: int = 0,
) -> list:
    """Run the selected trace properties (all of them when none are named)."""
    props = tuple(properties) if properties else ALL_PROPERTIES
    unknown = set(props) - set(ALL_PROPERTIES)
    if unknown:
        raise ConfigError(f"unknown properties {sorted(unknown)}; known: {list(ALL_PROPERTIES)}")
    config = trace.scenario
    if config is None:
        raise ConfigError("property checks need the scenario manifest")
    out = []
    lo, hi = config.log_domain
    sp = config.smoothing
    model = config.model

    if "self-consistency" in props:
        try:
            worst = trace.self_check()
            out.append(_verdict("self-consistency", "trace", True, f"max rel err {worst:.2e}"))
        except ConfigError as e:
            out.append(_verdict("self-consistency", "trace", False, str(e)))

    if "rvu" in props:
        for i, s in enumerate(config.sellers):
            scope = f"seller {i}"
            if s.algorithm not in ("omd", "oftrl"):
                out.append(PropertyVerdict("rvu", scope, "skip", f"{s.algorithm} has no constants"))
                continue
            eta = config.step_schedule(i).eta_fixed
            a, b, g = regret.rvu_constants(s.algorithm, eta, lo, hi)
            res = regret.rvu_check(trace, i, a, b, g)
            out.append(_verdict("rvu", scope, res.passed, f"slack {res.slack:.4g}"))

    if "drvu" in props:
        if model.kind != "ces":
            out.append(PropertyVerdict("drvu", "trace", "skip", "equilibrium benchmark needs CES"))
        else:
            seq = eq.equilibrium_sequence(
                model, eq.SupplySchedule(w=trace.supplies, kind="trace"), eq_cfg
            )
            p0 = config.initial_log_prices()
            any_run = False
            for i, s in enumerate(config.sellers):
                if s.algorithm != "omd":
                    continue
                any_run = True
                eta = config.step_schedule(i).eta_fixed
                a, b, g, r = regret.drvu_constants(eta, lo, hi, p0[i])
                res = regret.drvu_check(trace, i, a, b, g, r, seq.log_prices[:, i])
                out.append(
                    _verdict("drvu", f"seller {i}", res.passed,
                             f"slack {res.slack:.4g}, inflation {res.inflation:.3f}")
                )
            if not any_run:
                out.append(PropertyVerdict("drvu", "trace", "skip", "no OMD sellers"))

    if "smoothing-cost" in props:
        if model.kind != "iso" or sp is None:
            out.append(PropertyVerdict("smoothing-cost", "trace", "skip",
                                       "needs iso-elastic model with smoothing"))
        else:
            for i in range(config.n):
                res = market.smoothing_cost_check(
                    model, i, float(trace.supplies[0, i]), sp,
                    samples=samples, seed=seed, domain=config.price_domain,
                )
                out.append(_verdict("smoothing-cost", f"seller {i}", res.passed,
                                    f"{res.failures}/{res.samples} failures"))

    if "lipschitz" in props:
        if model.kind != "iso" or sp is None:
            out.append(PropertyVerdict("lipschitz", "trace", "skip",
                                       "needs iso-elastic model with smoothing"))
        else:
            for i in range(config.n):
                res = market.lipschitz_check(
                    model, i, float(trace.supplies[0, i]), sp,
                    samples=samples, seed=seed, domain=config.price_domain,
                )
                out.append(_verdict("lipschitz", f"seller {i}", res.passed,
                                    f"{res.failures}/{res.samples} failures"))

    if "stability" in props:
        any_run = False
        for i, s in enumerate(config.sellers):
            if s.algorithm != "oftrl":
                continue
            any_run = True
            eta = config.step_schedule(i).eta_fixed
            res = regret.stability_check(trace, i, eta)
            out.append(_verdict("stability", f"seller {i}", res.passed,
                                f"worst step {res.worst_step:.4g} vs {res.bound:.4g}"))
        if not any_run:
            out.append(PropertyVerdict("stability", "trace", "skip", "no OFTRL sellers"))

    if "equilibrium-shift" in props:
        if model.kind != "ces":
            out.append(PropertyVerdict("equilibrium-shift", "trace", "skip", "needs CES"))
        else:
            rng = np.random.default_rng(seed)
            base = np.asarray(config.supply_base, dtype=float)
            failures = 0
            k = max(samples // 10, 10)
            for _ in range(k):
                w_new = base * np.exp(rng.uniform(-np.log(2.0), np.log(2.0), base.shape[0]))
                try:
                    res = eq.equilibrium_shift_check(model, base, w_new, eq_cfg)
                except PricegameError:
                    failures += 1
                    continue
                failures += 0 if res.passed else 1
            out.append(_verdict("equilibrium-shift", "trace", failures == 0,
                                f"{failures}/{k} failures"))

    return out
