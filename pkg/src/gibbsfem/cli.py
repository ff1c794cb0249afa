"""Command-line entry point.

    gibbsfem run --preset fig_L2_p1 --out results --format json
    gibbsfem run --preset fig_IP_2d_p1 fig_IP_constrained_2d_p1 --jobs 2
    gibbsfem run --config my.toml --seed 3
    gibbsfem run --list-presets
    gibbsfem run --dump-preset fig_IP_constrained_2d_p1 > my.toml

Exit codes: 0 on success, 2 when the solver does not converge (results are
still written), 1 on usage errors.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import experiments as ex


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gibbsfem", description="Gibbs-constrained spline best approximations")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    run = sub.add_parser("run", help="run a preset or config file")
    src = run.add_mutually_exclusive_group()
    src.add_argument("--preset", nargs="+", help="names of embedded presets")
    src.add_argument("--config", help="flat TOML config file")
    src.add_argument("--list-presets", action="store_true", help="list presets and exit")
    src.add_argument("--dump-preset", metavar="NAME", help="print a preset as TOML and exit")
    run.add_argument("--out", default=".", help="output directory (default: current)")
    run.add_argument("--format", choices=("json", "csv"), default="json")
    run.add_argument("--seed", type=int, help="override the solver seed")
    run.add_argument("--jobs", type=int, default=None,
                     help="worker processes for several presets (default: one per CPU)")
    run.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command != "run":
        parser.print_help(sys.stderr)
        return 1
    if args.list_presets:
        for name in ex.PRESETS:
            print(f"{name:40s} {ex.DESCRIPTIONS[name]}")
        return 0
    if args.dump_preset:
        try:
            sys.stdout.write(ex.dump_config(ex.preset(args.dump_preset)))
        except KeyError as exc:
            print(f"gibbsfem: {exc.args[0]}", file=sys.stderr)
            return 1
        return 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.preset:
            configs = [ex.preset(name) for name in args.preset]
        elif args.config:
            configs = [ex.load_config(args.config)]
        else:
            print("gibbsfem: one of --preset, --config, --list-presets, --dump-preset is required",
                  file=sys.stderr)
            return 1
        if args.seed is not None:
            configs = [c.replace(seed=args.seed) for c in configs]
        if args.jobs is not None and args.jobs < 1:
            raise ValueError("--jobs must be positive")
    except (KeyError, ValueError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) else exc
        print(f"gibbsfem: {msg}", file=sys.stderr)
        return 1
    code = 0
    for result in ex.run_batch(configs, args.jobs):
        try:
            paths = ex.emit(result, args.out, args.format)
        except OSError as exc:
            print(f"gibbsfem: cannot write results: {exc}", file=sys.stderr)
            return 1
        ov = result.overshoot
        print(f"{result.name}: status={result.status} method={result.method} "
              f"overshoot={ov['value']:.6g} (relative {ov['relative']:.6g}) max G={result.G.max():.3g}")
        for p in paths:
            print(f"  wrote {p}")
        code = max(code, result.exit_code)
    return code


if __name__ == "__main__":
    sys.exit(main())
