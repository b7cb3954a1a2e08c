"""Command-line entry point: ``plpoi {design,ccdf,ber,af,detect,sweep} [options]``.

Exit status is 0 when every output was written and the run's hard checks
held, 1 when a check failed (outputs are still written) and 2 for invalid
configuration or arguments.
"""

import argparse
import logging
import sys

from .exceptions import ConfigError, DimensionError, DomainError
from .harness import RUNNERS, SUBCOMMANDS, ExperimentConfig

# flag -> (section, key) per subcommand; "solver" flags apply wherever a solver runs
_OVERRIDES = {
    "theta": ("solver", "theta"),
    "alpha_db": ("solver", "alpha_db"),
    "rho": ("solver", "rho"),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="plpoi", description="Low-PAPR OFDM-ISAC waveform experiments.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", metavar="PATH", help="INI file; missing keys use built-in defaults")
        p.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        p.add_argument("--out", metavar="DIR", default=f"out/{name}", help="output directory")
        p.add_argument("--theta", type=float)
        p.add_argument("--alpha-db", type=float)
        p.add_argument("--rho", type=float)
        if name in ("ccdf", "ber", "sweep"):
            p.add_argument("--trials", type=int)
        if name in ("ccdf", "ber"):
            p.add_argument("--w", type=float, help="baseline weight")
        if name == "ber":
            p.add_argument("--ebn0", help="comma-separated Eb/N0 grid in dB")
            p.add_argument("--channel", choices=("awgn", "rayleigh"))
    return parser


def overrides_from_args(args):
    out = {("run", "seed"): args.seed}
    for attr, key in _OVERRIDES.items():
        out[key] = getattr(args, attr)
    cmd = args.command
    if getattr(args, "trials", None) is not None:
        out[(cmd, "trials")] = args.trials
    if getattr(args, "w", None) is not None:
        out[(cmd, "w")] = args.w
    if getattr(args, "ebn0", None) is not None:
        out[("ber", "ebn0")] = args.ebn0
    if getattr(args, "channel", None) is not None:
        out[("ber", "channel")] = args.channel
    return out


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        overrides = overrides_from_args(args)
        if args.config:
            config = ExperimentConfig.from_file(args.config, overrides)
        else:
            config = ExperimentConfig(None, overrides)
        result = RUNNERS[args.command](config, args.out)
    except (ConfigError, DimensionError, DomainError) as exc:
        print(f"plpoi {args.command}: {exc}", file=sys.stderr)
        return 2
    for key, value in result.summary.items():
        print(f"{key}: {value}")
    for problem in result.violations:
        print(f"check failed: {problem}", file=sys.stderr)
    return 0 if result.ok else 1


if __name__ == "__main__":
    sys.exit(main())
