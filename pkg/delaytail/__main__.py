"""Main CLI entry point for delaytail."""

import argparse
import json
import sys

from . import __version__
from . import config


class ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit 1 with an INVALID_ARGUMENT object; exit 2 means not certified."""

    def error(self, message: str):
        from .commands import EXIT_ERROR
        from .errors import InvalidArgument

        self.print_usage(sys.stderr)
        error = InvalidArgument(message, {"prog": self.prog})
        print(json.dumps(error.to_dict(), sort_keys=True), file=sys.stderr)
        sys.exit(EXIT_ERROR)


def parse_eps_grid(text: str) -> list[float]:
    from .errors import InvalidArgument

    try:
        return [float(e) for e in text.split(",") if e.strip()]
    except ValueError:
        raise InvalidArgument(f"--eps is not a comma-separated list of numbers: {text!r}", {"eps": text})


def add_run_arguments(parser: argparse.ArgumentParser, config_required: bool = True) -> None:
    """Add the options shared by every command that reads a run config."""
    parser.add_argument(
        "--config", "-c",
        type=str,
        required=config_required,
        help="Path to the JSON run config"
    )
    parser.add_argument(
        "--seed",
        type=lambda s: int(s, 0),
        help=f"Master seed, 64-bit unsigned (overrides ${config.ENV_SEED} and the config)"
    )
    parser.add_argument(
        "--threads", "-j",
        type=int,
        help=f"Worker processes (overrides ${config.ENV_THREADS} and the config)"
    )
    parser.add_argument(
        "--out", "-o",
        type=str,
        help="Directory for report files (default: print to stdout)"
    )
    parser.add_argument(
        "--format",
        choices=["json", "csv"],
        help="Report format; csv applies to point series (default: json)"
    )
    parser.add_argument(
        "--quiet", "-q",
        action="store_true",
        help="Suppress progress output on stderr"
    )


def add_mode_argument(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--mode",
        choices=["classical-mc", "emulated-qae"],
        help="Numerator estimator (default: from config, else classical-mc)"
    )


def main(argv=None) -> int:
    """Main entry point for the delaytail CLI."""
    parser = ArgumentParser(
        prog="delaytail",
        description="delaytail - Delay-tail estimation with truncated regeneration cycles",
    )
    parser.add_argument(
        "--version", "-V",
        action="version",
        version=f"delaytail {__version__}"
    )

    subparsers = parser.add_subparsers(dest="command", help="Commands")

    # Plan command
    plan_parser = subparsers.add_parser(
        "plan",
        help="Compute drift constants, horizon and error budget"
    )
    add_run_arguments(plan_parser)

    # Estimate command
    estimate_parser = subparsers.add_parser(
        "estimate",
        help="Estimate the delay-tail probability with its error budget"
    )
    add_run_arguments(estimate_parser)
    add_mode_argument(estimate_parser)

    # Certify command
    certify_parser = subparsers.add_parser(
        "certify",
        help="Certify p_d <= 10^-k (exit 2 when not certified)"
    )
    add_run_arguments(certify_parser)
    add_mode_argument(certify_parser)
    certify_parser.add_argument(
        "--k",
        type=int,
        help="Target exponent k (default: plan.k from the config)"
    )

    # Verify command
    verify_parser = subparsers.add_parser(
        "verify",
        help="Check simulated cycles against the planner's bounds"
    )
    add_run_arguments(verify_parser)
    verify_parser.add_argument(
        "--suite", "-s",
        choices=["all", "tail", "truncation", "clipping", "arrival-cap", "jsq-clipping", "nummelin", "consistency"],
        default="all",
        help="Checks to run (default: every check that applies to the model)"
    )
    verify_parser.add_argument(
        "--cycles", "-n",
        type=int,
        default=config.DEFAULT_VERIFY_CYCLES,
        help=f"Cycles per check (default: {config.DEFAULT_VERIFY_CYCLES})"
    )
    verify_parser.add_argument(
        "--long-run",
        type=int,
        default=config.DEFAULT_LONG_RUN,
        help=f"Length of the time-average trajectory (default: {config.DEFAULT_LONG_RUN})"
    )

    # Resources command
    resources_parser = subparsers.add_parser(
        "resources",
        help="Count qubits and gates of the planned cycle circuit"
    )
    add_run_arguments(resources_parser)
    resources_parser.add_argument(
        "--value-bits",
        type=int,
        default=config.DEFAULT_VALUE_BITS,
        help=f"Fixed-point width of sampled times (default: {config.DEFAULT_VALUE_BITS})"
    )
    resources_parser.add_argument(
        "--output-bits",
        type=int,
        default=config.DEFAULT_OUTPUT_BITS,
        help=f"Width of the output register (default: {config.DEFAULT_OUTPUT_BITS})"
    )

    # QAE scaling command
    scaling_parser = subparsers.add_parser(
        "qae-scaling",
        help="Query counts of emulated IQAE vs Monte Carlo over an accuracy grid"
    )
    add_run_arguments(scaling_parser, config_required=False)
    scaling_parser.add_argument(
        "--amplitude", "-a",
        type=float,
        default=config.DEFAULT_SCALING_AMPLITUDE,
        help=f"True amplitude (default: {config.DEFAULT_SCALING_AMPLITUDE})"
    )
    scaling_parser.add_argument(
        "--eps",
        type=str,
        default=",".join(f"{e:g}" for e in config.DEFAULT_SCALING_EPS),
        help="Comma-separated accuracy grid"
    )
    scaling_parser.add_argument(
        "--delta",
        type=float,
        default=config.DEFAULT_SCALING_DELTA,
        help=f"Failure probability (default: {config.DEFAULT_SCALING_DELTA})"
    )
    scaling_parser.add_argument(
        "--runs",
        type=int,
        default=config.DEFAULT_SCALING_RUNS,
        help=f"Repetitions per accuracy (default: {config.DEFAULT_SCALING_RUNS})"
    )

    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return 0

    from .commands import Console, EXIT_ERROR
    from .errors import DelayTailError

    say = Console(quiet=args.quiet)
    try:
        if args.command == "qae-scaling":
            from .commands import qae_scaling_command, resolve_run
            eps_grid = parse_eps_grid(args.eps)
            if args.config:
                run = resolve_run(args.config, args.seed, args.threads, args.out, args.format)
                seed, raw, out, fmt = run.master_seed, run.raw, run.output_dir, args.format or "csv"
            else:
                env_seed = config.get_env_seed()
                seed = args.seed if args.seed is not None else (env_seed if env_seed is not None else config.DEFAULT_MASTER_SEED)
                raw, out, fmt = {}, args.out, args.format or "csv"
            return qae_scaling_command(
                say,
                a_true=args.amplitude,
                eps_grid=eps_grid,
                delta=args.delta,
                runs=args.runs,
                master_seed=seed,
                raw_config=raw,
                out=out,
                fmt=fmt,
            )

        from .commands import resolve_run
        run = resolve_run(args.config, args.seed, args.threads, args.out, args.format)

        if args.command == "plan":
            from .commands import plan_command
            return plan_command(run, say)

        elif args.command == "estimate":
            from .commands import estimate_command
            return estimate_command(run, say, mode=args.mode)

        elif args.command == "certify":
            from .commands import certify_command
            return certify_command(run, say, k=args.k, mode=args.mode)

        elif args.command == "verify":
            from .commands import verify_command
            return verify_command(run, say, suite=args.suite, n_cycles=args.cycles, n_long=args.long_run)

        elif args.command == "resources":
            from .commands import resources_command
            return resources_command(run, say, value_bits=args.value_bits, output_bits=args.output_bits)

    except DelayTailError as e:
        print(json.dumps(e.to_dict(), sort_keys=True, default=str), file=sys.stderr)
        return EXIT_ERROR

    return 0


if __name__ == "__main__":
    sys.exit(main())
