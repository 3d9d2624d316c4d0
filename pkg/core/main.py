"""
CGA Planner - Command Line Entry Point

    python -m core.main generate --zones 3 --periods 4 --out instance.json
    python -m core.main solve --instance instance.json --mode both --out-dir reports/

Exit codes: 0 on full success, 1 when a run finished with failed or
unconverged records, 2 on errors (bad input, backend failure).
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

from pydantic import ValidationError

from core.config import settings
from core.exceptions import InvalidInstanceError, PlannerError
from modules.cutpool.service_layer import parse_strategy, read_pool, write_pool
from modules.driver.schemas import AlgoConfig
from modules.driver.service_layer import emit_reports, prepare_pool, run_both, run_cga, run_monolithic_mga
from modules.instances.schemas import InstanceSpec
from modules.instances.service_layer import chain_links, generate_instance
from modules.instances.storage import read_instance, write_instance

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED_RECORDS = 1
EXIT_ERROR = 2


def setup_logging(level: Optional[str] = None) -> None:
    logging.basicConfig(
        level=getattr(logging, (level or settings.LOG_LEVEL).upper(), logging.INFO),
        format=settings.LOG_FORMAT,
    )


def _add_spec_arguments(parser: argparse.ArgumentParser) -> None:
    group = parser.add_argument_group("instance generator")
    group.add_argument("--spec", type=Path, help="InstanceSpec JSON file; overrides the flags below")
    group.add_argument("--name", default="generated")
    group.add_argument("--zones", type=int, default=1)
    group.add_argument("--periods", type=int, default=1)
    group.add_argument("--hours", type=int, default=24, help="hours per period")
    group.add_argument("--technologies", help="comma-separated technology names")
    group.add_argument("--link-zones", action="store_true", help="connect zones in a chain")
    group.add_argument("--integer", action="store_true", help="integral generator unit blocks")
    group.add_argument("--emission-cap", type=float)
    group.add_argument("--instance-seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cga-planner", description=f"{settings.APP_NAME} {settings.APP_VERSION}")
    parser.add_argument("--log-level", help=f"default {settings.LOG_LEVEL}")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="write a generated instance file")
    _add_spec_arguments(generate)
    generate.add_argument("--out", type=Path, required=True)

    solve = sub.add_parser("solve", help="run CGA, the monolithic oracle, or both")
    solve.add_argument("--instance", type=Path, help="instance file; generated from the generator flags when absent")
    _add_spec_arguments(solve)
    solve.add_argument("--out-dir", type=Path, required=True)
    solve.add_argument("--mode", choices=["cga", "monolithic", "both"], default="cga")
    solve.add_argument("--beta", type=float)
    solve.add_argument("--delta-ls", type=float)
    solve.add_argument("--delta-mga", type=float)
    solve.add_argument("--k-ls", type=int)
    solve.add_argument("--k-mga", type=int)
    solve.add_argument("--cut-strategy", default="least-cost-only", help="none | least-cost-only | all | first-n[(N)]")
    solve.add_argument("--partition-k", type=int)
    solve.add_argument("--partition-per-instance", type=int)
    solve.add_argument("--vectors", type=int, dest="vectors_total")
    solve.add_argument("--minmax-fraction", type=float)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--workers", type=int)
    solve.add_argument("--concurrent-instances", action="store_true")
    solve.add_argument("--backend", help=f"highs | reference (default {settings.LP_BACKEND})")
    solve.add_argument("--pool-in", type=Path, help="cut pool file whose least-cost cuts seed the run")
    solve.add_argument("--pool-out", type=Path, help="write the run's cut pool here")
    return parser


def spec_from_args(args: argparse.Namespace) -> InstanceSpec:
    if args.spec:
        return InstanceSpec.model_validate_json(args.spec.read_text(encoding="utf-8"))
    fields = {
        "name": args.name,
        "zones": args.zones,
        "periods": args.periods,
        "hours_per_period": args.hours,
        "integer_mode": args.integer,
        "emission_cap": args.emission_cap,
        "seed": args.instance_seed,
    }
    if args.technologies:
        fields["technologies"] = [tech.strip() for tech in args.technologies.split(",") if tech.strip()]
    if args.link_zones:
        fields["links"] = chain_links(args.zones)
    return InstanceSpec(**fields)


def config_from_args(args: argparse.Namespace) -> AlgoConfig:
    strategy, first_n = parse_strategy(args.cut_strategy)
    fields = {
        "mode": args.mode,
        "cut_strategy": strategy,
        "first_n": first_n,
        "concurrent_instances": args.concurrent_instances,
    }
    for name in (
        "beta",
        "delta_ls",
        "delta_mga",
        "k_ls",
        "k_mga",
        "partition_k",
        "partition_per_instance",
        "vectors_total",
        "minmax_fraction",
        "seed",
        "workers",
        "backend",
    ):
        value = getattr(args, name)
        if value is not None:
            fields[name] = value
    return AlgoConfig(**fields)


def write_failure(out_dir: Path, error: str, details: Optional[List[str]] = None) -> Path:
    """Machine-readable failure summary."""
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "failure.json"
    path.write_text(json.dumps({"error": error, "details": details or []}, indent=2) + "\n", encoding="utf-8")
    return path


def cmd_generate(args: argparse.Namespace) -> int:
    instance = generate_instance(spec_from_args(args))
    write_instance(instance, args.out)
    logger.info(f"✅ Instance '{instance.name}' written to {args.out}")
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    try:
        config = config_from_args(args)
        instance = read_instance(args.instance) if args.instance else generate_instance(spec_from_args(args))
        pool = None
        if config.mode == "monolithic":
            if args.pool_in or args.pool_out:
                logger.warning("--pool-in/--pool-out have no effect in monolithic mode")
        else:
            pool = prepare_pool(instance, config, read_pool(args.pool_in) if args.pool_in else None)
        if config.mode == "both":
            comparison = run_both(instance, config, pool=pool)
            emit_reports(comparison, args.out_dir)
            failures = comparison.cga.failures + comparison.monolithic.failures
            failures += [f"mga-{row.index}: sandwich check failed" for row in comparison.rows if not row.passed]
            succeeded = comparison.cga.succeeded and comparison.monolithic.succeeded and comparison.all_passed
        else:
            report = run_cga(instance, config, pool=pool) if pool is not None else run_monolithic_mga(instance, config)
            emit_reports(report, args.out_dir)
            failures = report.failures
            succeeded = report.succeeded
        if pool is not None and args.pool_out:
            write_pool(pool, args.pool_out)
    except InvalidInstanceError as e:
        logger.error(f"❌ Invalid instance: {e}")
        write_failure(args.out_dir, str(e), [v.message for v in e.violations])
        return EXIT_ERROR
    except OSError as e:
        logger.error(f"❌ Cannot read or write files: {e}")
        write_failure(args.out_dir, f"{type(e).__name__}: {e}")
        return EXIT_ERROR
    except (PlannerError, ValidationError, ValueError) as e:
        logger.error(f"❌ Solve failed: {e}", exc_info=True)
        write_failure(args.out_dir, str(e))
        return EXIT_ERROR

    if not succeeded:
        logger.warning(f"Run finished with {len(failures)} failure(s)")
        write_failure(args.out_dir, "run finished with failed records", failures)
        return EXIT_FAILED_RECORDS
    logger.info(f"✅ Run complete; reports in {args.out_dir}")
    return EXIT_OK


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level)
    logger.info(f"🚀 {settings.APP_NAME} {settings.APP_VERSION}: {args.command}")
    if args.command == "generate":
        try:
            return cmd_generate(args)
        except (PlannerError, ValidationError, ValueError, OSError) as e:
            logger.error(f"❌ Generation failed: {e}")
            return EXIT_ERROR
    return cmd_solve(args)


if __name__ == "__main__":
    sys.exit(main())
