"""Command-line entry point: ``selfdual solve <config>`` and ``selfdual verify <suite>``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path as FsPath

from .config import load_config
from .errors import ConfigError

EXIT_OK, EXIT_FAILED, EXIT_USAGE = 0, 1, 2


def _solve(args) -> int:
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        print(f"{args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    from . import io, plotting
    from .scenarios import run_scenario

    result = run_scenario(cfg, seed=args.seed)
    out = FsPath(args.output_dir or cfg["output_dir"])
    out.mkdir(parents=True, exist_ok=True)
    report = result.report
    report["artifacts"] = ["run_report.json", "trace.csv", "trace.png"]
    final_trace = result.traces[-1][1]
    io.write_trace_csv(out / "trace.csv", final_trace)
    if result.path is not None:
        io.write_path_binary(out / "path.bin", result.path)
        report["artifacts"] += ["path.bin", "energy.png"]
        plotting.plot_energy(result.energy_curve, out / "energy.png")
    if result.field is not None:
        io.write_field_binary(out / "field.bin", result.field)
        io.write_field_csv(out / "field.csv", result.field)
        report["artifacts"] += ["field.bin", "field.csv"]
    target = cfg["solver"]["value_tol"] * report["scale"]
    plotting.plot_trace(result.traces, out / "trace.png", value_target=target)
    io.write_json(out / "run_report.json", report)

    width = max(len(k) for k in report["checks"])
    for name, c in report["checks"].items():
        flag = "PASS" if c["pass"] else "FAIL"
        print(f"{name.ljust(width)}  {c['value']:.4e} <= {c['threshold']:.4e}  {flag}")
    print(f"termination: {report['solver']['termination']}; report written to {out / 'run_report.json'}")
    return EXIT_OK if result.passed else EXIT_FAILED


def _verify(args) -> int:
    from .verify import SUITES, format_table, run_suite

    if args.suite not in SUITES:
        print(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return EXIT_USAGE
    checks = run_suite(args.suite)
    print(format_table(checks))
    return EXIT_OK if all(c.passed for c in checks) else EXIT_FAILED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="selfdual", description="Selfdual variational solver for evolution equations")
    parser.add_argument("-v", "--verbose", action="store_true", help="log solver progress")
    sub = parser.add_subparsers(dest="command", required=True)
    s = sub.add_parser("solve", help="run a scenario from a JSON config")
    s.add_argument("config")
    s.add_argument("--output-dir", default=None, help="override the config's output directory")
    s.add_argument("--seed", type=int, default=None, help="override the config's random seed")
    s.set_defaults(func=_solve)
    v = sub.add_parser("verify", help="run a property battery")
    v.add_argument("suite", help="duality, boundary, fields, gradients or refinement")
    v.set_defaults(func=_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
