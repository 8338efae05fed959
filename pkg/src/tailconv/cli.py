"""Command-line front end: ``tailconv <command> [flags]``.

Commands write their reports into ``--out`` (a directory, created on demand).
JSON is used for verdicts and reports, CSV for series.  Every file records
the tool version and a hash of the inputs, and carries nothing else that
varies between runs, so repeating a command reproduces its files byte for byte.

Exit codes: 0 success, 2 config or usage error, 3 inconclusive verdict,
4 refusal because the numerical budget cannot meet the tolerance.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, canonical_json, config_hash, load_config
from .convolve import conv_chain
from .mc_oracle import estimate_concentration, simulate_random_sum
from .presets import preset
from .random_sum import DEFAULT_N_MAX, NumericalBudgetError, random_sum_tail
from .tail_classify import _ALIASES, RatioReport, _json_default, classify
from .tailgrid import TailGrid, hybrid_grid
from .theorem_check import (
    DEFAULT_K_MAX,
    DEFAULT_ROGOZIN_A,
    check_theorem4,
    check_theorem5,
    check_theorem6,
    rogozin_bound,
)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_INCONCLUSIVE = 3
EXIT_BUDGET = 4

DEFAULTS = {
    "x_max_classify": 200.0,
    "x_max_series": 50.0,
    "tol": 1e-6,
    "seed": 0,
    "samples": 100_000,
    "k_max": DEFAULT_K_MAX,
    "rogozin_A": DEFAULT_ROGOZIN_A,
}


class UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# output helpers
# ---------------------------------------------------------------------------


def _stamp(cfg_hash: str, command: str, flags: dict[str, Any]) -> dict[str, Any]:
    return {"tool": "tailconv", "version": __version__, "command": command, "config_hash": cfg_hash,
            "flags": flags}


def _write_json(path: Path, payload: dict[str, Any], stamp: dict[str, Any]) -> None:
    body = {"meta": stamp, **payload}
    path.write_text(json.dumps(body, indent=2, sort_keys=True, default=_json_default) + "\n")


def _csv_header(stamp: dict[str, Any]) -> str:
    return (f"tool tailconv {stamp['version']}\ncommand {stamp['command']}\nconfig_hash {stamp['config_hash']}\n"
            f"flags {canonical_json(stamp['flags'])}")


def _write_csv(path: Path, body: str, stamp: dict[str, Any]) -> None:
    head = "".join(f"# {line}\n" for line in _csv_header(stamp).splitlines())
    path.write_text(head + body)


def _tailgrid_csv(tail: TailGrid) -> str:
    lines = ["x,log_survival,survival,node_error"]
    errs = tail.node_errors if tail.node_errors is not None else np.full(tail.xs.size, tail.abs_error_bound)
    for x, l, s, e in zip(tail.xs, tail.log_survival, tail.survival, errs):
        lines.append(f"{float(x)!r},{float(l)!r},{float(s)!r},{float(e)!r}")
    return "\n".join(lines) + "\n"


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config(args) -> RunConfig:
    if not args.config:
        raise UsageError("this command needs --config")
    return load_config(args.config)


def _flags(args, *names: str) -> dict[str, Any]:
    return {n: getattr(args, n) for n in names}


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------


def run_classify(args) -> int:
    cfg = _config(args)
    if args.class_name is None:
        raise UsageError("classify needs --class")
    if args.class_name not in _ALIASES:
        raise UsageError(f"unknown class {args.class_name!r}; expected one of {sorted(_ALIASES)}")
    params = {"gamma": args.gamma} if args.gamma is not None else None
    x_max = args.x_max if args.x_max is not None else DEFAULTS["x_max_classify"]
    verdict = classify(cfg.first_model(), args.class_name, params=params, x_max=x_max)
    stamp = _stamp(cfg.hash, "classify", {"class": args.class_name, "x_max": x_max, "gamma": args.gamma})
    out = _out_dir(args)
    tag = verdict.class_name
    _write_json(out / f"classify_{tag}.json", {"result": verdict.to_dict()}, stamp)
    suffix = "ratio" if isinstance(verdict.evidence, RatioReport) else "series"
    _write_csv(out / f"classify_{tag}_{suffix}.csv", verdict.evidence.to_csv(), stamp)
    print(f"{tag}: {verdict.verdict}")
    return EXIT_INCONCLUSIVE if verdict.verdict == "inconclusive" else EXIT_OK


def run_convolve(args) -> int:
    cfg = _config(args)
    n = args.n if args.n is not None else (cfg.n if cfg.n is not None else 2)
    if n < 1:
        raise UsageError("--n must be at least 1")
    x_max = args.x_max if args.x_max is not None else DEFAULTS["x_max_series"]
    tol = args.tol if args.tol is not None else DEFAULTS["tol"]
    tail = conv_chain(cfg.spec, n, hybrid_grid(x_max), tol=tol)
    stamp = _stamp(cfg.hash, "convolve", {"n": n, "x_max": x_max, "tol": tol})
    out = _out_dir(args)
    _write_json(out / "convolve.json", {"result": tail.to_dict()}, stamp)
    _write_csv(out / "convolve.csv", _tailgrid_csv(tail), stamp)
    print(f"S_{n}: abs_error_bound={tail.abs_error_bound:.3e} tol_attained={tail.tol_attained}")
    return EXIT_OK


def _need_counting(cfg: RunConfig):
    if cfg.counting is None:
        raise UsageError("this command needs a 'counting' field in the config")
    return cfg.counting


def run_random_sum(args) -> int:
    cfg = _config(args)
    counting = _need_counting(cfg)
    x_max = args.x_max if args.x_max is not None else DEFAULTS["x_max_series"]
    tol = args.tol if args.tol is not None else DEFAULTS["tol"]
    tail = random_sum_tail(cfg.spec, counting, hybrid_grid(x_max), tol=tol, n_max=args.n_max)
    stamp = _stamp(cfg.hash, "random-sum", {"x_max": x_max, "tol": tol, "n_max": args.n_max})
    out = _out_dir(args)
    _write_json(out / "random_sum.json", {"result": tail.to_dict()}, stamp)
    _write_csv(out / "random_sum.csv", _tailgrid_csv(tail), stamp)
    print(f"S_eta: abs_error_bound={tail.abs_error_bound:.3e} tol_attained={tail.tol_attained}")
    return EXIT_OK


def _theorem_report(theorem: str, spec, counting, kappa, D, x_max, k_max):
    if theorem == "4":
        return check_theorem4(spec, counting, kappa, x_max=x_max, k_max=k_max)
    if theorem == "5":
        if D is None:
            raise UsageError("--theorem 5 needs --D (or a 'D' field in the config)")
        return check_theorem5(spec, counting, kappa, D, x_max=x_max)
    return check_theorem6(spec, counting, kappa, x_max=x_max, k_max=k_max)


def _rogozin_record(spec, n_terms: int, A: float, width: float, samples: int | None, seed: int) -> dict[str, Any]:
    models = spec.models(n_terms)
    bound = rogozin_bound(models, width, [width] * n_terms, A=A)
    rec: dict[str, Any] = {"n_terms": n_terms, "lambda": width, "lambda_k": width, "A": A,
                           "bound": bound if math.isfinite(bound) else "inf"}
    if samples:
        mc = estimate_concentration(spec, n_terms, width, samples, seed)
        rec["mc_concentration"] = mc.to_dict()
        rec["dominated"] = mc.estimate <= bound
    return rec


def run_check(args) -> int:
    cfg = _config(args)
    theorem = args.theorem
    if theorem is None:
        raise UsageError("check needs --theorem")
    A = args.rogozin_A
    stamp_flags = _flags(args, "theorem", "kappa", "D", "x_max", "k_max", "rogozin_A")
    out = _out_dir(args)
    if theorem == "lemma2":
        n_terms = args.n if args.n is not None else (cfg.n if cfg.n is not None else 16)
        stamp_flags.update(n=n_terms, samples=args.samples, seed=args.seed)
        rec = _rogozin_record(cfg.spec, n_terms, A, 1.0, args.samples, args.seed)
        _write_json(out / "check_lemma2.json", {"result": rec}, _stamp(cfg.hash, "check", stamp_flags))
        print(f"concentration bound (A={A:g}): {rec['bound']}")
        return EXIT_OK
    counting = _need_counting(cfg)
    kappa = args.kappa if args.kappa is not None else cfg.kappa
    if kappa is None:
        raise UsageError("check needs --kappa (or a 'kappa' field in the config)")
    D = args.D if args.D is not None else cfg.D
    x_max = args.x_max if args.x_max is not None else DEFAULTS["x_max_classify"]
    try:
        report = _theorem_report(theorem, cfg.spec, counting, kappa, D, x_max, args.k_max)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    stamp_flags.update(x_max=x_max, D=D, kappa=kappa)
    payload = {"result": report.to_dict(), "rogozin_A": A}
    _write_json(out / f"check_T{theorem}.json", payload, _stamp(cfg.hash, "check", stamp_flags))
    print(f"T{theorem} (kappa={kappa}): {report.overall}")
    for i, c in enumerate(report.conditions, 1):
        print(f"  condition {i}: {c.verdict}  {c.label}")
    return EXIT_INCONCLUSIVE if report.overall == "inconclusive" else EXIT_OK


def _mc_compare(det: TailGrid, mc, floor: float = 1e-4) -> dict[str, Any]:
    s = det.survival
    mask = s >= floor
    z = np.zeros(s.size)
    ok = mask & (mc.se > 0)
    z[ok] = (mc.estimate[ok] - s[ok]) / mc.se[ok]
    # a zero SE means every draw (or none) exceeded x; only a disagreement beyond the bound counts
    degenerate = mask & (mc.se == 0) & (np.abs(mc.estimate - s) > det.abs_error_bound)
    z[degenerate] = np.inf
    return {"survival_floor": floor, "nodes_compared": int(mask.sum()),
            "max_abs_z": float(np.max(np.abs(z[mask]))) if mask.any() else 0.0,
            "within_3se": bool(np.all(np.abs(z[mask]) <= 3.0))}


def run_mc_validate(args) -> int:
    cfg = _config(args)
    counting = _need_counting(cfg)
    x_max = args.x_max if args.x_max is not None else DEFAULTS["x_max_series"]
    tol = args.tol if args.tol is not None else DEFAULTS["tol"]
    xs = hybrid_grid(x_max)
    mc = simulate_random_sum(cfg.spec, counting, args.samples, args.seed, xs, n_max=args.n_max)
    det = random_sum_tail(cfg.spec, counting, xs, tol=tol, n_max=args.n_max)
    stamp = _stamp(cfg.hash, "mc-validate", _flags(args, "samples", "seed", "n_max") | {"x_max": x_max, "tol": tol})
    out = _out_dir(args)
    cmp = _mc_compare(det, mc)
    _write_csv(out / "mc_tail.csv", mc.to_csv(), stamp)
    _write_json(out / "mc_validate.json", {"manifest": {"seed": args.seed, "n_samples": args.samples,
                                                        "block_size": mc.meta.get("block_size")},
                                           "comparison": cmp}, stamp)
    print(f"max |z| = {cmp['max_abs_z']:.3f} over {cmp['nodes_compared']} nodes")
    return EXIT_OK


def _example_overrides(args) -> dict[str, Any]:
    names = {1: ("alpha", "lam", "D", "kappa"), 2: ("D", "kappa"), 3: ("kappa", "lam")}[args.id]
    return {n: getattr(args, n) for n in names if getattr(args, n) is not None}


def run_example(args) -> int:
    if args.id not in (1, 2, 3):
        raise UsageError("--id must be 1, 2 or 3")
    try:
        p = preset(args.id, **_example_overrides(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    x_max = args.x_max if args.x_max is not None else DEFAULTS["x_max_series"]
    tol = args.tol if args.tol is not None else DEFAULTS["tol"]
    cfg_obj = {"sequence": p.spec.to_dict(), "counting": p.counting.to_dict(), "kappa": p.kappa}
    if p.D is not None and p.theorem == 5:
        cfg_obj["D"] = p.D
    cfg_hash = config_hash(cfg_obj)
    flags = {"id": args.id, **p.params, "x_max": x_max, "tol": tol, "k_max": args.k_max, "samples": args.samples,
             "seed": args.seed}
    stamp = _stamp(cfg_hash, "example", flags)
    out = _out_dir(args)
    (out / f"example{args.id}_config.json").write_text(json.dumps(cfg_obj, indent=2, sort_keys=True) + "\n")

    reports = {}
    theorems = ("4",) if p.theorem == 4 else ("5",) if p.theorem == 5 else ("6", "4")
    for th in theorems:
        rep = _theorem_report(th, p.spec, p.counting, p.kappa, p.D, DEFAULTS["x_max_classify"], args.k_max)
        reports[th] = rep
        _write_json(out / f"example{args.id}_T{th}.json", {"result": rep.to_dict()}, stamp)

    xs = hybrid_grid(x_max)
    tail = random_sum_tail(p.spec, p.counting, xs, tol=tol)
    _write_csv(out / f"example{args.id}_random_sum.csv", _tailgrid_csv(tail), stamp)
    ol = classify(tail, "OL", x_max=x_max)
    _write_json(out / f"example{args.id}_OL.json", {"result": ol.to_dict()}, stamp)
    summary: dict[str, Any] = {
        "theorem_verdicts": {f"T{k}": r.overall for k, r in reports.items()},
        "random_sum_abs_error_bound": tail.abs_error_bound,
        "random_sum_OL": ol.verdict,
    }
    if args.samples:
        mc = simulate_random_sum(p.spec, p.counting, args.samples, args.seed, xs)
        _write_csv(out / f"example{args.id}_mc.csv", mc.to_csv(), stamp)
        summary["mc_comparison"] = _mc_compare(tail, mc)
    _write_json(out / f"example{args.id}_summary.json", {"result": summary}, stamp)
    for k, r in reports.items():
        print(f"example {args.id}: T{k} {r.overall}")
    print(f"example {args.id}: random-sum tail OL {ol.verdict}")
    inconclusive = any(r.overall == "inconclusive" for r in reports.values())
    return EXIT_INCONCLUSIVE if inconclusive else EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file (see tailconv.config for the schema)")
    common.add_argument("--out", default=".", help="output directory (default: current directory)")
    common.add_argument("--x-max", type=float, default=None,
                        help="largest grid node (default 200 for classify/check, 50 for tail series)")
    common.add_argument("--k-max", type=int, default=DEFAULTS["k_max"],
                        help="successor indices scanned by the theorem checks (default 10000)")
    common.add_argument("--tol", type=float, default=None, help="absolute tolerance for tails (default 1e-6)")
    common.add_argument("--seed", type=int, default=DEFAULTS["seed"], help="Monte Carlo seed (default 0)")
    common.add_argument("--samples", type=int, default=DEFAULTS["samples"],
                        help="Monte Carlo sample count (default 100000; 0 skips MC in 'example')")
    common.add_argument("--rogozin-A", type=float, default=DEFAULTS["rogozin_A"],
                        help="constant in the concentration-function bound (default 2)")
    common.add_argument("--n-max", type=int, default=DEFAULT_N_MAX,
                        help="largest number of summands a random sum may use (default 100000)")

    parser = argparse.ArgumentParser(prog="tailconv", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tailconv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("classify", parents=[common], help="class-membership verdict for the config's model")
    p.add_argument("--class", dest="class_name", help="OL, L, L(gamma), D, S or S*")
    p.add_argument("--gamma", type=float, default=None, help="gamma for L(gamma)")
    p.set_defaults(func=run_classify)

    p = sub.add_parser("convolve", parents=[common], help="tail of xi_1 + ... + xi_n")
    p.add_argument("--n", type=int, default=None, help="number of summands (default: config 'n' or 2)")
    p.set_defaults(func=run_convolve)

    p = sub.add_parser("random-sum", parents=[common], help="tail of the random sum S_eta")
    p.set_defaults(func=run_random_sum)

    p = sub.add_parser("check", parents=[common], help="check a theorem's hypothesis list")
    p.add_argument("--theorem", choices=("4", "5", "6", "lemma2"))
    p.add_argument("--kappa", type=int, default=None)
    p.add_argument("--D", type=int, default=None)
    p.add_argument("--n", type=int, default=None, help="number of summands for lemma2 (default 16)")
    p.set_defaults(func=run_check)

    p = sub.add_parser("example", parents=[common], help="run one of the three worked configurations")
    p.add_argument("--id", type=int, required=True, choices=(1, 2, 3))
    p.add_argument("--alpha", type=float, default=None)
    p.add_argument("--lam", type=float, default=None)
    p.add_argument("--D", type=int, default=None)
    p.add_argument("--kappa", type=int, default=None)
    p.set_defaults(func=run_example)

    p = sub.add_parser("mc-validate", parents=[common], help="Monte Carlo check of the random-sum tail")
    p.set_defaults(func=run_mc_validate)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, UsageError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalBudgetError as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET


if __name__ == "__main__":
    sys.exit(main())
