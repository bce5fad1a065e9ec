"""Command-line entry point.

Exit codes: 0 when every check passes, 1 on a verification failure, 2 on a
configuration or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def _emit(text: str, out: str | None):
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _load_json(path):
    from .config import ConfigError

    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None


def cmd_simulate(args) -> int:
    from .config import ExperimentConfig
    from .experiments import simulate

    cfg = ExperimentConfig.load(args.config)
    changes = {}
    if args.seed is not None:
        changes["seed"] = args.seed
    if args.workers is not None:
        changes["workers"] = args.workers
    if changes:
        cfg = ExperimentConfig.from_dict({**cfg.to_dict(), **changes})
    out = args.out or cfg.output_dir
    if not out:
        from .config import ConfigError

        raise ConfigError("no output directory: pass --out or set output_dir in the config")
    manifest = simulate(cfg, out)
    print(f"wrote {len(manifest['files'])} files to {out} (config {manifest['config_sha256'][:12]})")
    return EXIT_OK


def cmd_verify_kernel(args) -> int:
    from .verify import DEFAULT_GRID, build_report, report_json

    grid = DEFAULT_GRID if args.grid is None else _load_json(args.grid)
    report = build_report(grid, inject_fault=args.inject_fault)
    _emit(report_json(report), args.out)
    s = report["summary"]
    print(f"{s['n_checks'] - s['n_failed']}/{s['n_checks']} kernel checks passed", file=sys.stderr)
    return EXIT_OK if s["passed"] else EXIT_FAIL


def cmd_decay_fit(args) -> int:
    from .config import ConfigError
    from .decay import InsufficientDynamicRange, fit_decay
    from .experiments import read_l1_curve

    try:
        t, y, floor = read_l1_curve(args.input)
    except (OSError, KeyError, ValueError, StopIteration) as exc:
        raise ConfigError(f"cannot read observables from {args.input}: {exc}") from None
    if args.noise_floor is not None:
        floor = args.noise_floor
    if floor is None:
        raise ConfigError("no l1_noise_floor row in the input; pass --noise-floor")
    try:
        fit = fit_decay(t, y, floor, t_min=args.t_min, t_max=args.t_max)
    except InsufficientDynamicRange as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    d = fit.to_dict()
    d["dim"] = args.dim
    d["target_slope"] = -float(args.dim)
    d["in_band"] = bool(-args.dim - 0.5 <= fit.slope <= -args.dim + 0.5)
    _emit(json.dumps(d, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK


def cmd_toy_steady(args) -> int:
    from .experiments import TOY_TOL, toy_spec_from_config, toy_verification

    raw = _load_json(args.config)
    spec = toy_spec_from_config(raw)
    st = raw.get("stationarity", {"n": 10**5, "t_end": 20.0})
    if args.no_dynamics:
        st = None
    report = toy_verification(spec, tol=float(raw.get("tolerance", TOY_TOL)), n_grid=int(raw.get("n_grid", 5)),
                              stationarity=st or None)
    body = {k: v for k, v in report.items() if not k.startswith("_")}
    _emit(json.dumps(body, indent=2, sort_keys=True) + "\n", args.out)
    return EXIT_OK if report["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="clkinetic", description="Free-molecular transport with Cercignani-Lampis walls.")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="run a configured experiment and write snapshots and observables")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--seed", type=int)
    s.add_argument("--workers", type=int)
    s.set_defaults(func=cmd_simulate)

    v = sub.add_parser("verify-kernel", help="check the kernel identities over a parameter grid")
    v.add_argument("--grid", help="JSON grid; omit for the default grid")
    v.add_argument("--out", help="report path (default: stdout)")
    v.add_argument("--inject-fault", metavar="FAMILY", help="perturb the first check of FAMILY (harness self-test)")
    v.set_defaults(func=cmd_verify_kernel)

    d = sub.add_parser("decay-fit", help="fit the power-law slope of an L1 distance curve")
    d.add_argument("--input", required=True, help="observables.csv written by simulate")
    d.add_argument("--dim", type=int, required=True)
    d.add_argument("--t-min", type=float, default=0.0)
    d.add_argument("--t-max", type=float, default=float("inf"))
    d.add_argument("--noise-floor", type=float)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decay_fit)

    t = sub.add_parser("toy-steady", help="verify the periodic-box steady state")
    t.add_argument("--config", required=True)
    t.add_argument("--out")
    t.add_argument("--no-dynamics", action="store_true", help="skip the transport stationarity run")
    t.set_defaults(func=cmd_toy_steady)
    return p


def main(argv=None) -> int:
    from .config import ConfigError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
