#!/usr/bin/env python3
"""
Cograd Command Line
fit, gtrace, nulltable, are and simulate. Machine-readable output goes to
standard output; messages and logs go to standard error.
"""

import sys
import json
import logging
import argparse
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

# Add src and config to path
project_root = Path(__file__).parent.parent.parent
sys.path.insert(0, str(project_root / "src"))
sys.path.insert(0, str(project_root / "config"))

from services.cograd_service import CogradService, read_sample_csv
from services.errors import (
    CogradError,
    DuplicateAbscissa,
    InvalidConfig,
    InvalidSample,
    LevelUnattainable,
)
from services.montecarlo import SimulationConfig, parse_config_file
from cograd_config import get_output_rule
from runtime_config import load_runtime_config

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_MALFORMED = 2
EXIT_DUPLICATE_X = 3
EXIT_LEVEL_UNATTAINABLE = 4
EXIT_DOMAIN = 5


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {text}")
    return value


def _level(text: str) -> float:
    value = float(text)
    if not 0 < value < 1:
        raise argparse.ArgumentTypeError(f"level must lie in (0, 1), got {text}")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cograd",
        description="Slope estimation by Gini cograduation of residuals",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_input(p):
        p.add_argument("csv_path", help="CSV file with header x,y")
        group = p.add_mutually_exclusive_group()
        group.add_argument("--exact", dest="exact", action="store_true", default=True,
                           help="Parse values as exact decimals (default)")
        group.add_argument("--float", dest="exact", action="store_false",
                           help="Parse values as floats with the relative tie tolerance")

    fit = sub.add_parser("fit", help="Estimate the slope with optional confidence interval")
    add_input(fit)
    fit.add_argument("--level", type=_level, help="Target confidence level")
    fit.add_argument("--null-method", default="auto",
                     choices=["auto", "exact", "monte_carlo", "normal"],
                     help="Null law used for G* (auto: exact up to the ceiling, then normal)")
    fit.add_argument("--seed", type=_u64, default=0, help="Seed for the Monte Carlo null")
    fit.add_argument("--reps", type=int, help="Draws for the Monte Carlo null")
    fit.add_argument("--json", action="store_true", help="Accepted for symmetry; fit always emits JSON")

    gtrace = sub.add_parser("gtrace", help="Emit the step function b -> G(y;b)")
    add_input(gtrace)
    gtrace.add_argument("--json", action="store_true", help="Emit JSON records instead of CSV")

    nulltable = sub.add_parser("nulltable", help="Exact null distribution of G for n")
    nulltable.add_argument("n", type=int)
    nulltable.add_argument("--json", action="store_true", help="Emit JSON records instead of CSV")

    are = sub.add_parser("are", help="Asymptotic efficiency report for a built-in error law")
    are.add_argument("model_name")
    are.add_argument("--design", default="linear")
    are.add_argument("--json", action="store_true", help="Accepted for symmetry; are always emits JSON")

    simulate = sub.add_parser("simulate", help="Run a seeded Monte Carlo study")
    simulate.add_argument("config_path", help="Flat key = value config file")
    simulate.add_argument("--seed", type=_u64, help="Override the config seed")
    simulate.add_argument("--reps", type=int, help="Override the config replication count")
    simulate.add_argument("--workers", type=int, help="Override the worker count")
    simulate.add_argument("--level", type=_level, help="Override the config level")
    simulate.add_argument("--json", action="store_true", help="Accepted for symmetry; simulate always emits JSON")

    return parser


def _emit_json(payload) -> None:
    sys.stdout.write(json.dumps(payload, indent=get_output_rule("json_indent")) + "\n")


def _emit_table(df, as_json: bool) -> None:
    if as_json:
        _emit_json(df.to_dict(orient="records"))
    else:
        df.to_csv(sys.stdout, index=False)


def cmd_fit(service: CogradService, args) -> int:
    sample = read_sample_csv(args.csv_path, exact=args.exact)
    output = service.fit(sample, level=args.level, null_method=args.null_method,
                         seed=args.seed, reps=args.reps)
    _emit_json(output.model_dump())
    print(f"✅ beta_tilde = {output.beta_tilde} (N={output.n}, {output.breakpoint_count} breakpoints)",
          file=sys.stderr)
    if output.ci is not None:
        achieved = output.ci.achieved_level
        level_text = f"{achieved.num}/{achieved.den}" if achieved else f"{output.ci.achieved_level_decimal:.4f}"
        print(f"   interval ({output.ci.lower}, {output.ci.upper}) at achieved level {level_text}",
              file=sys.stderr)
    return EXIT_OK


def cmd_gtrace(service: CogradService, args) -> int:
    sample = read_sample_csv(args.csv_path, exact=args.exact)
    _emit_table(service.gtrace(sample), args.json)
    return EXIT_OK


def cmd_nulltable(service: CogradService, args) -> int:
    _emit_table(service.null_table(args.n), args.json)
    return EXIT_OK


def cmd_are(service: CogradService, args) -> int:
    _emit_json(service.are(args.model_name, args.design).model_dump())
    return EXIT_OK


def cmd_simulate(service: CogradService, args) -> int:
    config = parse_config_file(args.config_path)
    overrides = {
        key: value for key, value in (
            ("seed", args.seed), ("reps", args.reps), ("workers", args.workers),
            ("target_level", args.level),
        ) if value is not None
    }
    if args.level is not None:
        overrides["compute_ci"] = True
    if overrides:
        try:
            config = SimulationConfig(**{**config.model_dump(), **overrides})
        except ValidationError as e:
            raise InvalidConfig(f"Invalid simulation override: {e}") from e
    report = service.simulate(config)
    _emit_json(report.model_dump())
    print(f"✅ Simulation finished in {report.runtime_seconds:.2f}s", file=sys.stderr)
    return EXIT_OK


COMMANDS = {
    "fit": cmd_fit,
    "gtrace": cmd_gtrace,
    "nulltable": cmd_nulltable,
    "are": cmd_are,
    "simulate": cmd_simulate,
}


def main(argv: Optional[List[str]] = None) -> int:
    """Run one command and return its exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_OK if e.code == 0 else EXIT_MALFORMED

    runtime = load_runtime_config()
    logging.basicConfig(
        level=getattr(logging, runtime.log_level, logging.INFO),
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        stream=sys.stderr,
    )

    try:
        service = CogradService(runtime)
        return COMMANDS[args.command](service, args)
    except DuplicateAbscissa as e:
        print(f"❌ Duplicate x: {e}", file=sys.stderr)
        return EXIT_DUPLICATE_X
    except (InvalidSample, InvalidConfig) as e:
        print(f"❌ Invalid input: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except LevelUnattainable as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_LEVEL_UNATTAINABLE
    except CogradError as e:
        print(f"❌ {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_DOMAIN
    except FileNotFoundError as e:
        print(f"❌ File not found: {e}", file=sys.stderr)
        return EXIT_MALFORMED
    except Exception as e:
        logger.error(f"Unexpected failure in {args.command}: {e}")
        return EXIT_UNEXPECTED


if __name__ == "__main__":
    sys.exit(main())
