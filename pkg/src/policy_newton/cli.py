"""Command-line front end.

Subcommands: ``run``, ``check``, ``solve-cubic`` and ``schedule``. Exit codes:
0 success, 1 a check failed, 2 bad configuration or input, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from pathlib import Path

import numpy as np

from .checks import run_checks
from .cubic import CubicModel, cubic_finalsolver, cubic_subsolver, model_value, solve_exact, verify_step
from .driver import run_acrpn, run_crpn, run_reinforce
from .exceptions import CapExceeded, InvalidInput, MaxIterExceeded, NumericalFailure
from .mdp import validate_mdp
from .policy import TabularSoftmaxPolicy
from .sampler import check_seed
from .schedule import compute_constants, schedule_approx, schedule_expectation, schedule_highprob
from .validation import resolve_mdp

SCHEMA_VERSION = 1
OUT_DIR_ENV = "POLICY_NEWTON_OUT_DIR"
ALGORITHMS = ("crpn", "acrpn", "reinforce", "check")
MODES = ("expectation", "high-probability")

CONFIG_KEYS = {
    "schema_version", "mdp", "policy", "algorithm", "epsilon", "mode", "delta_prime", "seed",
    "theta0", "overrides", "reinforce", "output", "timing",
}
POLICY_KEYS = {"kind", "grad_bound", "hess_bound", "hess_lipschitz"}
REINFORCE_KEYS = {"step_size", "iters", "batch"}
OUTPUT_KEYS = {"trace", "summary"}

DEFAULTS = {
    "schema_version": SCHEMA_VERSION,
    "mdp": "chain2",
    "policy": {"kind": "tabular_softmax"},
    "algorithm": "crpn",
    "epsilon": 0.1,
    "mode": "expectation",
    "delta_prime": 0.01,
    "seed": 0,
    "theta0": None,
    "overrides": {},
    "reinforce": {"step_size": 0.1, "iters": 50, "batch": 100},
    "output": {"trace": "trace.csv", "summary": "summary.json"},
    "timing": False,
}


class ConfigError(InvalidInput):
    pass


def _reject_unknown(section, doc, allowed):
    if not isinstance(doc, dict):
        raise ConfigError(f"{section} must be an object")
    unknown = set(doc) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {section}: {sorted(unknown)}")


def load_config(path=None, base_dir=None) -> dict:
    """Read and validate a JSON run config, filling defaults. Unknown keys are errors."""
    doc = {}
    if path is not None:
        if not os.path.exists(path):
            raise ConfigError(f"config file not found: {path}")
        try:
            doc = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: not valid JSON ({exc})") from exc
        base_dir = Path(path).parent
    _reject_unknown("config", doc, CONFIG_KEYS)
    if doc.get("schema_version", SCHEMA_VERSION) != SCHEMA_VERSION:
        raise ConfigError(f"unsupported schema_version {doc['schema_version']!r}; expected {SCHEMA_VERSION}")
    cfg = {k: (dict(v) if isinstance(v, dict) else v) for k, v in DEFAULTS.items()}
    for key in ("policy", "reinforce", "output"):
        if key in doc:
            _reject_unknown(key, doc[key], {"policy": POLICY_KEYS, "reinforce": REINFORCE_KEYS,
                                            "output": OUTPUT_KEYS}[key])
            cfg[key].update(doc[key])
    cfg.update({k: v for k, v in doc.items() if k not in ("policy", "reinforce", "output")})
    cfg["_base_dir"] = str(base_dir) if base_dir is not None else None
    return cfg


def check_config(cfg) -> None:
    if cfg["algorithm"] not in ALGORITHMS:
        raise ConfigError(f"algorithm must be one of {ALGORITHMS}, got {cfg['algorithm']!r}")
    if cfg["mode"] not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg['mode']!r}")
    eps = cfg["epsilon"]
    if isinstance(eps, bool) or not isinstance(eps, (int, float)) or not math.isfinite(eps) or eps <= 0:
        raise ConfigError("epsilon must be positive")
    if cfg["policy"].get("kind", "tabular_softmax") != "tabular_softmax":
        raise ConfigError(f"unsupported policy kind {cfg['policy']['kind']!r}")
    check_seed(cfg["seed"])
    if not isinstance(cfg["overrides"], dict):
        raise ConfigError("overrides must be an object")


def _mdp_from_config(cfg):
    src = cfg["mdp"]
    if isinstance(src, str) and cfg.get("_base_dir") and not os.path.isabs(src):
        candidate = Path(cfg["_base_dir"]) / src
        if candidate.exists():
            src = str(candidate)
    mdp = resolve_mdp(src)
    report = validate_mdp(mdp)
    if not report.passed:
        raise ConfigError(f"MDP fixture failed validation:\n{report}")
    return mdp


def _policy_from_config(cfg, mdp):
    bounds = {k: v for k, v in cfg["policy"].items() if k != "kind"}
    return TabularSoftmaxPolicy.for_mdp(mdp, **bounds)


def _out_dir(args):
    return Path(args.out_dir or os.environ.get(OUT_DIR_ENV) or ".")


def execute_run(cfg, out_dir, threads=None):
    """Run the configured algorithm and write the trace and summary files."""
    check_config(cfg)
    mdp = _mdp_from_config(cfg)
    policy = _policy_from_config(cfg, mdp)
    algo = cfg["algorithm"]
    common = dict(n_jobs=threads, timing=bool(cfg["timing"]))
    if algo == "crpn":
        report = run_crpn(mdp, policy, cfg["theta0"], cfg["epsilon"], cfg["mode"], cfg["seed"],
                          cfg["overrides"], delta_prime=cfg["delta_prime"], **common)
    elif algo == "acrpn":
        report = run_acrpn(mdp, policy, cfg["theta0"], cfg["epsilon"], cfg["seed"], cfg["overrides"],
                           delta_prime=cfg["delta_prime"], **common)
    elif algo == "reinforce":
        r = cfg["reinforce"]
        report = run_reinforce(mdp, policy, cfg["theta0"], r["step_size"], r["iters"], r["batch"],
                               cfg["seed"], epsilon=cfg["epsilon"], **common)
    else:
        raise ConfigError("algorithm 'check' is run with the check subcommand")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / cfg["output"]["trace"]).write_text(report.csv_text())
    (out / cfg["output"]["summary"]).write_text(report.summary_text())
    return report


def _apply_flags(cfg, args):
    if getattr(args, "seed", None) is not None:
        cfg["seed"] = args.seed
    for key in ("mdp", "algorithm", "epsilon", "mode"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    return cfg


def cmd_run(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    report = execute_run(cfg, _out_dir(args), args.threads)
    line = f"{report.algorithm}: {len(report.records)} iterations, R={report.output_index}, " \
           f"trajectories={report.total_trajectories}"
    if report.certificate is not None:
        line += f", sosp={'pass' if report.certificate['passed'] else 'fail'}"
    print(line)
    return 0


def cmd_check(args) -> int:
    cfg = _apply_flags(load_config(args.config), args)
    check_config(cfg)
    mdp = _mdp_from_config(cfg)
    if args.grad_bound is not None:
        cfg["policy"]["grad_bound"] = args.grad_bound
    policy = _policy_from_config(cfg, mdp)
    outcomes = run_checks(mdp, policy, seed=cfg["seed"], probe_count=args.probe_count)
    for o in outcomes:
        print(o.line())
    failed = [o for o in outcomes if not o.passed]
    if failed:
        print(f"check failed: {failed[0].name}", file=sys.stderr)
        return 1
    return 0


def _read_array(path, ndim, what):
    if not os.path.exists(path):
        raise ConfigError(f"{what} file not found: {path}")
    text = Path(path).read_text()
    try:
        arr = np.asarray(json.loads(text), dtype=float)
    except (json.JSONDecodeError, ValueError, TypeError):
        try:
            arr = np.loadtxt(path, dtype=float, ndmin=ndim)
        except ValueError as exc:
            raise ConfigError(f"{path}: cannot parse {what} ({exc})") from exc
    if ndim == 1:
        arr = arr.ravel() if arr.ndim <= 1 or 1 in arr.shape else arr
    if arr.ndim != ndim:
        raise ConfigError(f"{path}: {what} must be {ndim}-dimensional, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{path}: {what} has non-finite entries")
    return arr


def cmd_solve_cubic(args) -> int:
    g = _read_array(args.g, 1, "g")
    H = _read_array(args.H, 2, "H")
    if H.shape[0] != H.shape[1]:
        raise ConfigError(f"H must be square, got shape {H.shape}")
    if H.shape[0] != g.size:
        raise ConfigError(f"H is {H.shape[0]}x{H.shape[1]} but g has length {g.size}")
    if not np.allclose(H, H.T, atol=1e-8):
        raise ConfigError("H must be symmetric")
    if not args.alpha > 0:
        raise ConfigError("alpha must be positive")
    l = args.l if args.l is not None else max(float(np.linalg.norm(H, 2)), 1e-12)
    model = CubicModel(g, H, args.alpha, l)
    if args.method == "exact":
        delta = solve_exact(model).delta
    elif args.method == "subsolver":
        delta, _ = cubic_subsolver(model, args.epsilon, args.inner_iters, rng=args.seed)
    else:
        delta = cubic_finalsolver(model, args.epsilon)
    rep = verify_step(model, delta)
    print("delta: " + " ".join(format(float(x), ".17g") for x in delta))
    print(f"model_value: {model_value(model, delta):.17g}")
    print(f"stationarity_residual: {rep.stationarity_residual:.17g}")
    print(f"curvature_margin: {rep.curvature_margin:.17g}")
    return 0


def cmd_schedule(args) -> int:
    const = compute_constants(args.K, args.G, args.L1, args.L2, args.H)
    if args.mode == "expectation":
        sched = schedule_expectation(const, args.epsilon, args.d)
    elif args.mode == "high-probability":
        sched = schedule_highprob(const, args.epsilon, args.delta_prime, args.d)
    else:
        sched = schedule_approx(const, args.epsilon, args.delta_prime, args.d)
    print(json.dumps({"constants": const.to_dict(), "schedule": sched.to_dict()}, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="policy-newton", description="Cubic-regularised policy Newton for tabular MDPs.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--seed", type=int, help="override the config seed")
        sp.add_argument("--threads", type=int, default=None, help="sampling threads (does not change results)")
        sp.add_argument("--out-dir", help=f"output directory (default ${OUT_DIR_ENV} or .)")
        sp.add_argument("--mdp", help="builtin fixture name or fixture path")
        sp.add_argument("--epsilon", type=float)

    run = sub.add_parser("run", help="run an optimiser and write trace/summary files")
    common(run)
    run.add_argument("--algorithm", choices=ALGORITHMS[:3])
    run.add_argument("--mode", choices=MODES)
    run.set_defaults(func=cmd_run)

    chk = sub.add_parser("check", help="oracle cross-check suite on a fixture")
    common(chk)
    chk.add_argument("--probe-count", type=int, default=2000)
    chk.add_argument("--grad-bound", type=float, help="declared score bound G")
    chk.set_defaults(func=cmd_check)

    cub = sub.add_parser("solve-cubic", help="solve one cubic model")
    cub.add_argument("--g", required=True, help="vector file (JSON or whitespace text)")
    cub.add_argument("--H", required=True, help="matrix file (JSON or whitespace text)")
    cub.add_argument("--alpha", type=float, required=True)
    cub.add_argument("--method", choices=("exact", "subsolver", "finalsolver"), default="exact")
    cub.add_argument("--l", type=float, help="gradient-Lipschitz constant (default ||H||)")
    cub.add_argument("--epsilon", type=float, default=1e-6)
    cub.add_argument("--inner-iters", type=int, default=1000)
    cub.add_argument("--seed", type=int, default=0)
    cub.set_defaults(func=cmd_solve_cubic)

    sch = sub.add_parser("schedule", help="print constants and schedule")
    for name, kind in (("K", float), ("G", float), ("L1", float), ("L2", float), ("H", int)):
        sch.add_argument(f"--{name}", type=kind, required=True)
    sch.add_argument("--epsilon", type=float, required=True)
    sch.add_argument("--d", type=int, required=True)
    sch.add_argument("--delta-prime", type=float, default=0.01)
    sch.add_argument("--mode", choices=MODES + ("approximate",), default="expectation")
    sch.set_defaults(func=cmd_schedule)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, CapExceeded, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (NumericalFailure, MaxIterExceeded) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
