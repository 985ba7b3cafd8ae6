"""Command line interface: ``causal-rules <subcommand> ...``.

Exit status is 0 on success, 1 on user error (bad flags, unreadable or
malformed input) and 2 on internal error. JSON output has sorted keys and
floats rounded to 6 significant digits.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
import warnings

import numpy as np

from . import __version__
from .classify import classify
from .data import load_csv, write_csv
from .errors import CausalRulesError
from .estimators import METHODS, estimate, make_context
from .miner import PRUNING_MODES, MiningConfig, mine, rules_csv
from .simulation import Scenario, ScenarioSpec, analytic_att, bootstrap, generate, table4_run

THREADS_ENV = "CAUSAL_RULES_THREADS"

DEFAULTS = {
    "alpha": 0.05,
    "conditioning": "adjusted",
    "caliper": 0.1,
    "min_cell": 5,
    "method": "all",
    "bootstrap": 0,
    "min_effect": 0.0,
    "estimator": "cc",
    "pruning": "posp+ecrp",
    "max_s": 2,
    "max_x": 3,
    "n": 5000,
    "seeds": 10,
    "classification": "all",
    "s": [],
    "given": [],
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _round(obj):
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v) or math.isinf(v):
            return None
        return float(f"{v:.6g}")
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k): _round(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_round(v) for v in obj]
    return obj


def dumps(obj) -> str:
    return json.dumps(_round(obj), sort_keys=True)


def _threads(args) -> int:
    if args.threads is not None:
        return max(1, int(args.threads))
    env = os.environ.get(THREADS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise UsageError(f"{THREADS_ENV} must be an integer, got {env!r}") from None
    return 1


def _data_args(p):
    p.add_argument("--data", required=True, help="0/1 CSV with a header row of item names")
    p.add_argument("--roles", required=True, help="JSON object mapping item name to role")


def _common(p):
    p.add_argument("--config", help="JSON file of option defaults (flags take precedence)")
    p.add_argument("--threads", type=int, help=f"worker threads (fallback: ${THREADS_ENV})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="causal-rules", description="Causal rule mining on binary data.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("load", help="validate a dataset and print a summary")
    _data_args(p)
    _common(p)

    p = sub.add_parser("classify", help="classify covariates relative to an intervention")
    _data_args(p)
    _common(p)
    p.add_argument("--x", required=True, help="intervention item name")
    p.add_argument("--y", help="outcome item name (default: the outcome-role item)")
    p.add_argument("--s", nargs="*", help="subpopulation item names")
    p.add_argument("--alpha", type=float)
    p.add_argument("--conditioning", choices=["adjusted", "treatment"])

    p = sub.add_parser("estimate", help="estimate the ATT of one intervention item")
    _data_args(p)
    _common(p)
    p.add_argument("--x", required=True)
    p.add_argument("--y")
    p.add_argument("--s", nargs="*")
    p.add_argument("--given", nargs="*", help="other intervention items held true")
    p.add_argument("--method", choices=list(METHODS) + ["all"])
    p.add_argument("--caliper", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--conditioning", choices=["adjusted", "treatment"])
    p.add_argument("--min-cell", type=int)
    p.add_argument("--bootstrap", type=int, help="bootstrap replicates (0: none)")

    p = sub.add_parser("mine", help="mine frequent closed causal rules")
    _data_args(p)
    _common(p)
    p.add_argument("--min-support", type=float, required=True)
    p.add_argument("--min-effect", type=float)
    p.add_argument("--estimator", choices=list(METHODS))
    p.add_argument("--pruning", choices=list(PRUNING_MODES))
    p.add_argument("--max-s", type=int)
    p.add_argument("--max-x", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--caliper", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--min-cell", type=int)
    p.add_argument("--out", help="JSON-lines output file (default: stdout)")
    p.add_argument("--csv", help="optional CSV summary of the rules")

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    _common(p)
    p.add_argument("--scenario", required=True, choices=["1", "2", "3", "4", "5"])
    p.add_argument("--n", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--emit-csv", metavar="DIR", help="write data.csv, roles.json and manifest.json")

    p = sub.add_parser("table4", help="all estimators on all scenarios, averaged over seeds")
    _common(p)
    p.add_argument("--n", type=int)
    p.add_argument("--seeds", type=int)
    p.add_argument("--classification", choices=["all", "inferred", "true"])
    p.add_argument("--caliper", type=float)
    p.add_argument("--min-cell", type=int)
    p.add_argument("--alpha", type=float)
    p.add_argument("--out", metavar="DIR", help="write table4.csv, table4.txt and manifest.json")
    return parser


def _resolve(args) -> dict:
    """Flags > config file > defaults."""
    cfg = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
    out = {}
    for key, val in vars(args).items():
        if key in ("config", "command"):
            continue
        if val is None:
            val = cfg.get(key, DEFAULTS.get(key))
        out[key] = val
    return out


def _manifest(command, opts, t0, ds=None) -> dict:
    return {
        "subcommand": command,
        "config": opts,
        "dataset_fingerprint": ds.fingerprint() if ds is not None else None,
        "seed": opts.get("seed"),
        "version": __version__,
        "wall_time": time.perf_counter() - t0,
    }


def _write(path, text):
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _require(opts, *keys):
    for k in keys:
        if opts.get(k) is None:
            raise UsageError(f"--{k.replace('_', '-')} is required")


def _cmd_load(opts, out, t0):
    ds = load_csv(opts["data"], opts["roles"])
    out.write(dumps({**ds.summary(), "manifest": _manifest("load", opts, t0, ds)}) + "\n")


def _cmd_classify(opts, out, t0):
    ds = load_csv(opts["data"], opts["roles"])
    x = ds.index(opts["x"])
    y = ds.index(opts["y"]) if opts["y"] else ds.outcome
    s = ds.items(opts["s"])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        cls = classify(ds, x, y, s, alpha=opts["alpha"], conditioning=opts["conditioning"])
    rep = {name: {k: v for k, v in d.items()} for name, d in cls.report(ds.names).items()}
    out.write(dumps({"items": rep, "alpha": opts["alpha"],
                     "manifest": _manifest("classify", opts, t0, ds)}) + "\n")


def _cmd_estimate(opts, out, t0):
    methods = METHODS if opts["method"] == "all" else (opts["method"],)
    if "psm" in methods or opts["bootstrap"]:
        _require(opts, "seed")
    seed = 0 if opts["seed"] is None else opts["seed"]
    ds = load_csv(opts["data"], opts["roles"])
    x = ds.index(opts["x"])
    y = ds.index(opts["y"]) if opts["y"] else ds.outcome
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        ctx = make_context(ds, x, y, ds.items(opts["s"]), ds.items(opts["given"]),
                           alpha=opts["alpha"], conditioning=opts["conditioning"])
    results = []
    for m in methods:
        est = estimate(ctx, m, caliper=opts["caliper"], min_cell=opts["min_cell"], seed=seed)
        rec = est.to_dict()
        if opts["bootstrap"]:
            try:
                b = bootstrap(ctx, m, opts["bootstrap"], seed, caliper=opts["caliper"],
                              min_cell=opts["min_cell"], threads=_threads_from(opts))
                rec["bootstrap"] = b.to_dict()
            except CausalRulesError as exc:
                rec["bootstrap"] = {"error": str(exc)}
        results.append(rec)
    adjust = [ds.names[i] for i in ctx.adjustment_items]
    payload = {"adjustment_set": adjust, "manifest": _manifest("estimate", opts, t0, ds)}
    if len(results) == 1:
        payload.update(results[0])
    else:
        payload["estimates"] = results
    out.write(dumps(payload) + "\n")


def _threads_from(opts):
    return opts.get("threads") or 1


def _cmd_mine(opts, out, t0):
    if not 0 < opts["min_support"] <= 1:
        raise UsageError(f"--min-support must be in (0, 1], got {opts['min_support']}")
    if opts["min_effect"] < 0:
        raise UsageError(f"--min-effect must be >= 0, got {opts['min_effect']}")
    if opts["estimator"] == "psm":
        _require(opts, "seed")
    ds = load_csv(opts["data"], opts["roles"])
    cfg = MiningConfig(
        min_support=opts["min_support"],
        min_effect=opts["min_effect"],
        max_subpop_size=opts["max_s"],
        max_intervention_size=opts["max_x"],
        estimator=opts["estimator"],
        pruning=opts["pruning"],
        caliper=opts["caliper"] if opts["caliper"] is not None else DEFAULTS["caliper"],
        alpha=opts["alpha"] if opts["alpha"] is not None else DEFAULTS["alpha"],
        min_cell=opts["min_cell"] if opts["min_cell"] is not None else DEFAULTS["min_cell"],
        seed=0 if opts["seed"] is None else opts["seed"],
        threads=_threads_from(opts),
    )
    result = mine(ds, cfg)
    lines = [dumps(r.to_dict(ds.names)) for r in result.rules]
    lines.append(dumps({"stats": result.stats.to_dict(),
                        "manifest": _manifest("mine", opts, t0, ds)}))
    text = "\n".join(lines) + "\n"
    if opts["out"]:
        _write(opts["out"], text)
    else:
        out.write(text)
    if opts["csv"]:
        _write(opts["csv"], rules_csv(result.rules, ds.names))


def _cmd_simulate(opts, out, t0):
    _require(opts, "seed")
    spec = ScenarioSpec(Scenario.parse(opts["scenario"]), opts["n"], opts["seed"])
    ds = generate(spec)
    man = _manifest("simulate", opts, t0, ds)
    info = {"scenario": spec.id.value, "n": spec.n, "true_att": analytic_att(spec),
            **ds.summary(), "manifest": man}
    if opts["emit_csv"]:
        d = opts["emit_csv"]
        os.makedirs(d, exist_ok=True)
        write_csv(ds, os.path.join(d, "data.csv"), os.path.join(d, "roles.json"))
        _write(os.path.join(d, "manifest.json"), dumps(man) + "\n")
    out.write(dumps(info) + "\n")


def _cmd_table4(opts, out, t0):
    rep = table4_run(
        opts["n"], opts["seeds"],
        classification=opts["classification"],
        alpha=opts["alpha"] if opts["alpha"] is not None else DEFAULTS["alpha"],
        caliper=opts["caliper"] if opts["caliper"] is not None else DEFAULTS["caliper"],
        min_cell=opts["min_cell"] if opts["min_cell"] is not None else DEFAULTS["min_cell"],
        threads=_threads_from(opts),
    )
    text = rep.to_text()
    if opts["out"]:
        d = opts["out"]
        _write(os.path.join(d, "table4.csv"), rep.to_csv())
        _write(os.path.join(d, "table4.txt"), text)
        _write(os.path.join(d, "manifest.json"), dumps(_manifest("table4", opts, t0)) + "\n")
    out.write(text)


COMMANDS = {
    "load": _cmd_load,
    "classify": _cmd_classify,
    "estimate": _cmd_estimate,
    "mine": _cmd_mine,
    "simulate": _cmd_simulate,
    "table4": _cmd_table4,
}


def run(argv=None, out=None, err=None) -> int:
    """Run the CLI; returns the exit status."""
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        opts = _resolve(args)
        opts["threads"] = _threads(args)
        COMMANDS[args.command](opts, out, t0)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, CausalRulesError, OSError, ValueError) as exc:
        err.write(f"error: {exc}\n")
        return 1
    except Exception as exc:  # noqa: BLE001
        err.write(f"internal error: {type(exc).__name__}: {exc}\n")
        return 2
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
