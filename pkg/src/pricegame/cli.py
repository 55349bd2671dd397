"""Command-line front end.

Subcommands: run, sweep, check, equilibrium, report.  Exit codes are stable:
0 success (and all checks passing), 1 check failures, 2 configuration errors
(including malformed JSON and schema violations), 3 runtime errors.  Data and
tables go to stdout, diagnostics to stderr.  ``PRICEGAME_OUT`` sets the
default output directory.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import checks, equilibrium, harness, regret
from .errors import ConfigError, PricegameError

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


def _err(msg: str):
    print(f"error: {msg}", file=sys.stderr)


def _default_out(config_path) -> Path:
    root = Path(os.environ.get("PRICEGAME_OUT", "runs"))
    return root / Path(config_path).stem


def _parse_override(text: str):
    if "=" not in text:
        raise ConfigError(f"override {text!r} must look like key.path=value")
    key, raw = text.split("=", 1)
    try:
        value = json.loads(raw)
    except json.JSONDecodeError:
        value = raw
    return key.split("."), value


def _apply_overrides(doc: dict, overrides):
    for path, value in map(_parse_override, overrides or ()):
        node = doc
        for part in path[:-1]:
            if part.isdigit() and isinstance(node, list):
                node = node[int(part)]
            elif isinstance(node, dict):
                node = node.setdefault(part, {})
            else:
                raise ConfigError(f"cannot descend into {part!r} applying override")
        leaf = path[-1]
        if leaf.isdigit() and isinstance(node, list):
            node[int(leaf)] = value
        elif isinstance(node, dict):
            node[leaf] = value
        else:
            raise ConfigError(f"cannot set {leaf!r} applying override")
    return doc


def _load_config(path, overrides) -> harness.ScenarioConfig:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"malformed JSON in {path}: line {e.lineno}, column {e.colno}: {e.msg}") from None
    if not isinstance(doc, dict):
        raise ConfigError("scenario document must be a JSON object")
    return harness.ScenarioConfig.from_dict(_apply_overrides(doc, overrides))


def cmd_run(args) -> int:
    config = _load_config(args.config, args.set)
    trace = harness.run_scenario(config, backend=args.backend)
    out_dir = Path(args.out) if args.out else _default_out(args.config)
    harness.save_run(trace, out_dir, backend_name=args.backend)
    print(out_dir)
    return EXIT_OK


def cmd_sweep(args) -> int:
    horizons = []
    for tok in args.horizons.split(","):
        tok = tok.strip()
        if not tok:
            continue
        horizons.append(int(tok))
    if len(horizons) != len(set(horizons)):
        raise ConfigError("duplicate horizons in sweep")
    if not horizons:
        raise ConfigError("sweep needs at least one horizon")
    config = _load_config(args.config, args.set)
    i = args.seller
    rows = []
    pairs = []
    for T in sorted(horizons):
        cfg = harness.ScenarioConfig.from_dict(
            _apply_overrides(config.to_dict(), [f"horizon={T}"])
        )
        trace = harness.run_scenario(cfg, backend=args.backend)
        best = regret.best_fixed_price(trace, i, grid_points=args.grid)
        r = float(regret.static_regret(trace, i, best.price)[-1])
        a = float(regret.approx_regret(trace, i, best.price, cfg.smoothing)[-1])
        pairs.append((T, r))
        exponent = ""
        if len([1 for _, v in pairs if v > 0]) >= 3:
            try:
                exponent = repr(regret.fit_scaling_exponent(pairs).exponent)
            except ConfigError:
                exponent = ""
        rows.append((T, r, a, exponent))

    out_dir = Path(args.out) if args.out else _default_out(args.config)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "sweep.csv"
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["T", "regret", "approx_regret", "exponent_so_far"])
        for T, r, a, e in rows:
            writer.writerow([T, repr(r), repr(a), e])
    print("T,regret,approx_regret,exponent_so_far")
    for T, r, a, e in rows:
        print(f"{T},{r!r},{a!r},{e}")
    print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def cmd_check(args) -> int:
    trace = harness.load_run(args.trace)
    props = [p.strip() for p in args.properties.split(",") if p.strip()] if args.properties else None
    verdicts = checks.run_property_checks(trace, props, samples=args.samples)
    width = max(len(v.name) for v in verdicts)
    scope_w = max(len(v.scope) for v in verdicts)
    for v in verdicts:
        print(f"{v.name:<{width}}  {v.scope:<{scope_w}}  {v.status.upper():<4}  {v.detail}")
    return EXIT_CHECK_FAILED if any(v.failed for v in verdicts) else EXIT_OK


def cmd_equilibrium(args) -> int:
    config = _load_config(args.config, args.set)
    if args.supply:
        w = np.array([float(v) for v in args.supply.split(",")])
    else:
        w = np.asarray(config.supply_base, dtype=float)
    res = equilibrium.tatonnement(
        config.model, w, equilibrium.EquilibriumSolverConfig(tol=args.tol),
        domain=config.price_domain,
    )
    print("good,price,supply")
    for i, p in enumerate(res.prices.p):
        print(f"{i},{float(p)!r},{float(w[i])!r}")
    print(f"residual {res.residual:.3e} after {res.iterations} iterations", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    trace = harness.load_run(args.run)
    out_dir = Path(args.out) if args.out else Path(args.run if Path(args.run).is_dir() else Path(args.run).parent)
    out_dir.mkdir(parents=True, exist_ok=True)
    sellers = [args.seller] if args.seller is not None else list(range(trace.n))
    summary = {"benchmark": args.benchmark, "sellers": {}}
    verdicts = checks.run_property_checks(trace, samples=args.samples)
    summary["properties"] = [
        {"name": v.name, "scope": v.scope, "status": v.status, "detail": v.detail}
        for v in verdicts
    ]
    for i in sellers:
        report = regret.build_report(trace, i, benchmark=args.benchmark, grid_points=args.grid)
        report.verdicts = {
            v.name: v.status for v in verdicts if v.scope in (f"seller {i}", "trace")
        }
        path = out_dir / f"report_s{i}.csv"
        report.to_csv(path, trace)
        summary["sellers"][str(i)] = {
            "best_fixed_price": report.fixed_benchmark.price,
            "benchmark_value": report.fixed_benchmark.value,
            "final_regret": float(report.regret[-1]) if trace.horizon else 0.0,
            "final_approx_regret": float(report.approx[-1]) if trace.horizon else 0.0,
            "final_dynamic_regret": (
                float(report.dynamic[-1]) if report.dynamic is not None and trace.horizon else None
            ),
            "csv": str(path),
        }
    summary_path = out_dir / "summary.json"
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(summary, indent=2, sort_keys=True))
    print(f"wrote {summary_path}", file=sys.stderr)
    return EXIT_CHECK_FAILED if any(v.failed for v in verdicts) else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pricegame",
        description="Multi-seller dynamic pricing simulator and regret analyzer",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--set", action="append", metavar="KEY.PATH=VALUE",
                       help="override a config value (JSON-parsed; repeatable)")
        p.add_argument("--backend", choices=["ext", "python"], default=None,
                       help="kernel backend (default: compiled when available)")

    p = sub.add_parser("run", help="run one scenario, write trace + manifest")
    p.add_argument("config")
    p.add_argument("--out", help="output directory (default $PRICEGAME_OUT/<config stem>)")
    add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="run a scenario across horizons, fit exponents")
    p.add_argument("config")
    p.add_argument("--horizons", required=True, help="comma-separated horizons")
    p.add_argument("--seller", type=int, default=0)
    p.add_argument("--grid", type=int, default=regret.BENCHMARK_GRID)
    p.add_argument("--out")
    add_common(p)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("check", help="verify structural properties on a saved run")
    p.add_argument("trace", help="run directory or trace.csv path")
    p.add_argument("--properties", help=f"comma-separated subset of {','.join(checks.ALL_PROPERTIES)}")
    p.add_argument("--samples", type=int, default=200)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("equilibrium", help="solve market-clearing prices for a supply vector")
    p.add_argument("config")
    p.add_argument("--supply", help="comma-separated supply overriding the config base")
    p.add_argument("--tol", type=float, default=1e-8)
    add_common(p)
    p.set_defaults(func=cmd_equilibrium)

    p = sub.add_parser("report", help="benchmarks, regret curves and verdicts for a run")
    p.add_argument("run", help="run directory")
    p.add_argument("--benchmark", choices=["fixed-price", "equilibrium-sequence"],
                   default="fixed-price")
    p.add_argument("--seller", type=int, default=None)
    p.add_argument("--grid", type=int, default=regret.BENCHMARK_GRID)
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--out")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as e:
        _err(str(e))
        return EXIT_CONFIG
    except PricegameError as e:
        _err(str(e))
        return EXIT_RUNTIME
    except OSError as e:
        _err(str(e))
        return EXIT_RUNTIME


def entry():  # console-script shim
    raise SystemExit(main())
