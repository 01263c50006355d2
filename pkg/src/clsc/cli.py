"""``clsc`` command-line entry point.

Exit codes: 0 success, 1 certificate or solve failure, 2 input error.
"""

from __future__ import annotations

import argparse
import sys
import warnings
from pathlib import Path

from clsc import experiments
from clsc.model import AllocationMode, ConvergenceError, EquilibriumWarning, ModelError

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 1, 2


def _emit(text: str, out: str | None) -> None:
    if out is None or out == "-":
        sys.stdout.write(text)
    else:
        Path(out).write_text(text, newline="")


def _config(path: str | None) -> experiments.ScenarioConfig:
    return experiments.baseline_config() if path is None else experiments.load_config(path)


def cmd_baseline(args) -> int:
    config = _config(args.config)
    if args.mode == "both":
        modes = [AllocationMode.PROPORTIONAL, AllocationMode.INERTIA_RESPONSIVENESS]
    else:
        modes = [AllocationMode(args.mode)]
    rows = experiments.baseline_rows(config, modes)
    _emit(experiments.to_csv(experiments.BASELINE_HEADER, rows), args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    config = _config(args.config)
    axis_2 = None
    if args.param2 is not None:
        if None in (args.from2, args.to2, args.steps2):
            raise ModelError("--param2 needs --from2, --to2 and --steps2")
        axis_2 = experiments.Axis(args.param2, args.from2, args.to2, args.steps2)
    outputs = tuple(args.outputs.split(",")) if args.outputs else experiments.OUTPUT_VOCAB
    spec = experiments.SweepSpec(experiments.Axis(args.param, args.from_, args.to, args.steps),
                                 axis_2, outputs)
    _emit(experiments.run_sweep(config, spec, jobs=args.jobs), args.out)
    return EXIT_OK


def cmd_figures(args) -> int:
    config = _config(args.config)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    for name, text in experiments.run_figures(config, jobs=args.jobs).items():
        (out_dir / f"{name}.csv").write_text(text, newline="")
    return EXIT_OK


def cmd_verify(args) -> int:
    config = _config(args.config)
    certs = experiments.verify(config, grid=args.grid, seed=args.seed, printed=args.printed_quadratic)
    print("certificate,value,tolerance,status")
    for cert in certs:
        print(cert.line())
    failed = [c.name for c in certs if c.required and not c.passed]
    if failed:
        print(f"FAILED: {', '.join(failed)}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clsc", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    config_help = "JSON config (default: the shipped baseline)"

    p = sub.add_parser("baseline", help="symmetric equilibrium table for the config")
    p.add_argument("--config", help=config_help)
    p.add_argument("--mode", choices=["proportional", "inertia", "both"], default="both")
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("sweep", help="one- or two-parameter sweep as CSV")
    p.add_argument("--config", help=config_help)
    p.add_argument("--param", required=True)
    p.add_argument("--from", dest="from_", type=float, required=True)
    p.add_argument("--to", type=float, required=True)
    p.add_argument("--steps", type=int, required=True)
    p.add_argument("--param2")
    p.add_argument("--from2", type=float)
    p.add_argument("--to2", type=float)
    p.add_argument("--steps2", type=int)
    p.add_argument("--outputs", help="comma-separated subset of: " + ",".join(experiments.OUTPUT_VOCAB))
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", help="CSV path (default: stdout)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("figures", help="write every figure sweep to a directory")
    p.add_argument("--config", help=config_help)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_figures)

    p = sub.add_parser("verify", help="run the brute-force certificates")
    p.add_argument("--config", help=config_help)
    p.add_argument("--grid", type=int, default=4001)
    p.add_argument("--seed", type=int, default=42)
    p.add_argument("--printed-quadratic", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings.simplefilter("ignore", EquilibriumWarning)
    try:
        return args.func(args)
    except ConvergenceError as exc:
        print(f"clsc {args.command}: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except ModelError as exc:
        print(f"clsc {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"clsc {args.command}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
