"""
PCS sanity-check harness.

Command-line entry point: plan, run, analyze, simulate-pve, calibrate,
converge and confidence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

import pydantic

from config.settings import load_config, settings
from src.errors import HarnessError, ValidationError
from src.types import Arm, SubsampleMode, Variant

logging.basicConfig(
    level=settings.logging.level,
    format="%(asctime)s - %(name)s - %(levelname)s - %(message)s"
)
logger = logging.getLogger(__name__)


def _float_list(text: str) -> List[float]:
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pcs-harness",
        description="Run an agent over perturbed datasets and apply the Yes and Overlap checks.",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="HarnessConfig JSON file")
    common.add_argument("--seed", type=int, help="master seed override")
    common.add_argument("--out", help="output directory (default: config output_dir)")

    ledgers = argparse.ArgumentParser(add_help=False)
    ledgers.add_argument("--ledger", action="append", required=True,
                         help="run ledger (repeatable; the first supplies defaults)")
    ledgers.add_argument("--datasets", help="comma-separated dataset ids to include")

    pairing = argparse.ArgumentParser(add_help=False)
    pairing.add_argument("--alpha", type=float)
    pairing.add_argument("--tau", type=float)
    pairing.add_argument("--variant", choices=["standard", "precise-null"], default="standard")
    pairing.add_argument("--null-source",
                         help="dataset id template for the null sample, e.g. '{base_dataset}'")
    pairing.add_argument("--null-arm", choices=[a.value for a in Arm], default=Arm.NULL.value)

    commands.add_parser("plan", parents=[common], help="write the run plan")

    run = commands.add_parser("run", parents=[common], help="execute a plan")
    run.add_argument("--plan", required=True)
    run.add_argument("--jobs", type=int)
    run.add_argument("--resume", action="store_true")
    run.add_argument("--max-runs", type=int)

    analyze = commands.add_parser("analyze", parents=[common, ledgers, pairing], help="classify datasets")
    analyze.add_argument("--B", type=int, dest="bootstrap_b")

    pve = commands.add_parser("simulate-pve", parents=[common], help="synthesize PVE-controlled datasets")
    pve.add_argument("--pve", type=_float_list)

    calibrate = commands.add_parser("calibrate", parents=[common, ledgers], help="null-calibration simulation")
    calibrate.add_argument("--replicates", type=int, default=1000)
    calibrate.add_argument("--B", type=int, dest="bootstrap_b")
    calibrate.add_argument("--alpha", type=float)

    converge = commands.add_parser("converge", parents=[common, ledgers, pairing], help="convergence curves")
    converge.add_argument("--sizes", type=_int_list)
    converge.add_argument("--modes", default="random,alt_only")
    converge.add_argument("--repetitions", type=int)
    converge.add_argument("--B-small", type=int, dest="bootstrap_b_small")

    confidence = commands.add_parser("confidence", parents=[common], help="supervisor confidence pass")
    confidence.add_argument("--ledger", required=True)
    confidence.add_argument("--jobs", type=int)

    return parser


def _datasets(args) -> Optional[List[str]]:
    if not getattr(args, "datasets", None):
        return None
    return [d.strip() for d in args.datasets.split(",") if d.strip()]


def dispatch(args: argparse.Namespace) -> dict:
    """Run the selected command and return its summary."""
    from src import commands

    config = load_config(args.config)
    if args.seed is not None:
        config = config.model_copy(update={"master_seed": args.seed})
    out = Path(args.out or config.output_dir)
    variant = Variant.PRECISE_NULL if getattr(args, "variant", "") == "precise-null" else Variant.STANDARD
    if args.command in ("run", "confidence") and args.seed is not None:
        raise ValidationError(f"--seed has no effect on {args.command}: run seeds are fixed by the plan")

    if args.command == "plan":
        return commands.cmd_plan(config, out)
    if args.command == "run":
        override = config if args.config else None
        return commands.cmd_run(Path(args.plan), out, args.jobs, args.resume, args.max_runs, override)
    if args.command == "analyze":
        return commands.cmd_analyze(
            [Path(p) for p in args.ledger], out,
            alpha=args.alpha, tau=args.tau, variant=variant,
            null_source=args.null_source, null_arm=Arm(args.null_arm),
            seed=args.seed, B=args.bootstrap_b, datasets=_datasets(args),
        )
    if args.command == "simulate-pve":
        return commands.cmd_simulate_pve(config, out, args.pve, args.seed)
    if args.command == "calibrate":
        return commands.cmd_calibrate(
            [Path(p) for p in args.ledger], out,
            replicates=args.replicates, B=args.bootstrap_b, alpha=args.alpha,
            seed=args.seed, datasets=_datasets(args),
        )
    if args.command == "converge":
        try:
            modes = [SubsampleMode(m.strip()) for m in args.modes.split(",") if m.strip()]
        except ValueError as e:
            raise argparse.ArgumentTypeError(str(e))
        return commands.cmd_converge(
            [Path(p) for p in args.ledger], out,
            sizes=args.sizes, modes=modes, repetitions=args.repetitions,
            B_small=args.bootstrap_b_small, alpha=args.alpha, tau=args.tau, variant=variant,
            null_source=args.null_source, null_arm=Arm(args.null_arm),
            seed=args.seed, datasets=_datasets(args),
        )
    if args.command == "confidence":
        override = config if args.config else None
        return commands.cmd_confidence(Path(args.ledger), out, args.jobs, override)
    raise HarnessError(f"unknown command {args.command}")


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        result = dispatch(args)
    except HarnessError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return e.exit_code
    except (pydantic.ValidationError, argparse.ArgumentTypeError) as e:
        logger.error(f"Invalid configuration: {e}")
        return 2
    except Exception:
        logger.exception("Harness fault")
        return 4
    print(json.dumps(result, indent=2, default=str))
    return 0


if __name__ == "__main__":
    sys.exit(main())
