"""Command-line entry point: ``sdnbgp <command> ...`` or ``python -m sdnbgp``."""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from . import experiments as ex
from .errors import ConfigError, SdnBgpError

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3

COMMANDS = {
    "bounds": ex.cmd_analytic_bounds,
    "converge": ex.cmd_analytic_convergence,
    "simulate": ex.cmd_simulate,
    "topo-stats": ex.cmd_topo_stats,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sdnbgp", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in COMMANDS.items():
        p = sub.add_parser(name, help=(fn.__doc__ or "").strip().splitlines()[0] if fn.__doc__ else None)
        p.add_argument("config", help="YAML experiment file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key, e.g. simulation.trials=50")
        p.add_argument("--seed", type=int, help="shorthand for --set seed=N")
        p.add_argument("--trials", type=int, help="shorthand for --set simulation.trials=N")
        p.add_argument("-o", "--output-dir", help="shorthand for --set output_dir=DIR")

    p = sub.add_parser("reproduce", help="run a named figure or table preset")
    p.add_argument("preset", choices=ex.PRESETS)
    p.add_argument("--caida", help="CAIDA as-rel file (needed by fig3 and fig8)")
    p.add_argument("--trials", type=int)
    p.add_argument("-o", "--output-dir")

    p = sub.add_parser("emit-plots", help="write matplotlib scripts for a results directory")
    p.add_argument("results_dir")
    return parser


def _load(args) -> ex.ExperimentConfig:
    overrides = list(args.overrides)
    if args.seed is not None:
        overrides.append(f"seed={args.seed}")
    if args.trials is not None:
        overrides.append(f"simulation.trials={args.trials}")
    if args.output_dir is not None:
        overrides.append(f"output_dir={args.output_dir}")
    return ex.ExperimentConfig.load(args.config, overrides)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in COMMANDS:
            outputs = COMMANDS[args.command](_load(args))
        elif args.command == "reproduce":
            outputs = ex.reproduce(args.preset, args.caida, args.trials, args.output_dir)
        else:
            outputs = ex.cmd_emit_plots(args.results_dir)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (SdnBgpError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    for path in outputs:
        print(path)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
