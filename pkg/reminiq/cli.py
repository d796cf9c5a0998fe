import argparse
import os
import sys
from typing import List, Optional

from .config import Config
from .logger import ColoredOutput
from .runner import ExperimentRunner
from .validators import ValidationError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_RUNTIME = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="reminiq",
        description="Simulated reminiscence-therapy patient and revised Q-learning toolkit",
        epilog="Exit codes: 0 success, 1 validation failure, 2 runtime error",
    )

    # flags shared by every experiment command
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="Experiment config (JSON or YAML)")
    common.add_argument("--seed", type=int, action="append", metavar="N",
                        help="Experiment seed (repeatable; overrides the config's seeds)")
    common.add_argument("--out", metavar="DIR", help="Output directory")
    common.add_argument("--reward", choices=["R1", "R2"], help="Reward variant")
    common.add_argument("--model", metavar="default|PATH", help="Patient model source")

    subparsers = parser.add_subparsers(dest="command", help="Available commands")

    subparsers.add_parser(
        "train", parents=[common],
        help="Train a Q-table per seed and write qtable.json, trainlog.csv, policies.json, manifest.json"
    )

    evaluate_parser = subparsers.add_parser(
        "evaluate", parents=[common],
        help="Build the evaluation report for trained seed directories"
    )
    evaluate_parser.add_argument(
        "run_dirs", nargs="*", metavar="RUN_DIR",
        help="Seed directories to evaluate (default: every configured seed under --out)"
    )

    validate_parser = subparsers.add_parser(
        "validate-model",
        help="Check a patient model file's structure and qualitative constraints"
    )
    validate_parser.add_argument("path", help="Model JSON file")
    validate_parser.add_argument("--report", metavar="PATH", help="Also write the full report as JSON")

    subparsers.add_parser(
        "compare-rewards", parents=[common],
        help="Train and evaluate under R1 and R2 with shared seeds; write per-state policy tables"
    )

    trace_parser = subparsers.add_parser(
        "trace", parents=[common],
        help="Roll out a policy and write interaction traces as CSV"
    )
    source = trace_parser.add_mutually_exclusive_group(required=True)
    source.add_argument("--policy", metavar="PATH", help="Policy JSON (state -> action)")
    source.add_argument("--run", metavar="RUN_DIR", help="Use the greedy policy of a trained run")
    trace_parser.add_argument("-n", "--episodes", type=int, default=20, help="Number of traced episodes")
    trace_parser.add_argument("--trace-out", metavar="PATH", help="Trace CSV path")

    export_parser = subparsers.add_parser(
        "export-model", parents=[common],
        help="Write the configured patient model as a model JSON file"
    )
    export_parser.add_argument("path", help="Destination file")

    subparsers.add_parser("version", help="Show reminiq version")
    return parser


def _load_runner(args) -> ExperimentRunner:
    config = Config(args.config)
    config.apply_overrides(seeds=args.seed, output_dir=args.out, reward=args.reward, model=args.model)
    return ExperimentRunner(config.to_experiment())


def _print_constraint_report(report) -> bool:
    if report.structural_errors:
        ColoredOutput.error(f"{len(report.structural_errors)} structural error(s):")
        for error in report.structural_errors:
            print(f"  {error}", file=sys.stderr)
        return False
    summary = report.summary()
    for constraint, counts in summary["constraints"].items():
        line = f"{constraint}: {counts['checked']} checked, {counts['violated']} violated"
        if counts["violated"]:
            ColoredOutput.error(line)
        else:
            ColoredOutput.success(line)
    for check in report.violations:
        cells = f"{'/'.join(check.actions)} {' vs '.join(check.states)}"
        print(f"  {check.constraint_id} {cells}: {check.detail}", file=sys.stderr)
    return report.ok


def run(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        return EXIT_OK

    if args.command == "version":
        from . import __version__
        print(f"reminiq v{__version__}")
        return EXIT_OK

    runner = None
    try:
        if args.command == "validate-model":
            report = ExperimentRunner.cmd_validate_model(args.path, args.report)
            return EXIT_OK if _print_constraint_report(report) else EXIT_VALIDATION

        runner = _load_runner(args)
        if args.command == "train":
            runner.cmd_train()
        elif args.command == "evaluate":
            runner.cmd_evaluate(args.run_dirs or None)
        elif args.command == "compare-rewards":
            runner.cmd_compare_rewards()
        elif args.command == "trace":
            runner.cmd_trace(policy_path=args.policy, run_dir=args.run,
                             n=args.episodes, out=args.trace_out)
        elif args.command == "export-model":
            runner.cmd_export_model(args.path)
        else:
            parser.print_help()
        return EXIT_OK

    except ValidationError as e:
        ColoredOutput.error(str(e))
        return EXIT_VALIDATION
    except KeyboardInterrupt:
        ColoredOutput.warning("\nOperation cancelled by user.")
        return EXIT_RUNTIME
    except Exception as e:
        ColoredOutput.error(f"Error: {str(e)}")
        if os.getenv("DEBUG"):
            import traceback
            traceback.print_exc()
        return EXIT_RUNTIME
    finally:
        if runner is not None:
            runner.close()


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
