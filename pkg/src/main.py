import argparse
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence

from loguru import logger

from src.ambrosetti_prodi.calibration import calibrate
from src.ambrosetti_prodi.context import prepare_problem
from src.config import Config, ExperimentConfig, load_config, load_suite, operator_from_config
from src.discretization.field import Field
from src.discretization.scheme import discretize
from src.errors import ConfigError, HJBLabError
from src.pipelines import PIPELINES
from src.pipelines.base_pipeline import ExperimentOutcome
from src.reporting.html_generator import HTMLGenerator
from src.reporting.manifest import RunManifest, make_run_dir, utc_iso
from src.reporting.plotdata import emit_plotdata

EXIT_PASS = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2


def configure_logging(level: Optional[str] = None) -> None:
    logger.remove()
    logger.add(sys.stderr, level=level or Config.LOG_LEVEL,
               format="<green>{time:HH:mm:ss}</green> | <level>{level: <8}</level> | {message}")


def _run_one(kind: str, config: ExperimentConfig, run_dir: Path) -> ExperimentOutcome:
    pipeline = PIPELINES[kind](config, run_dir)
    try:
        return pipeline.run()
    except Exception as e:
        # anything HJBLabError does not cover is still contained to its experiment
        logger.exception("[CRITICAL ERROR] Experiment {} crashed", kind)
        return ExperimentOutcome(kind=kind, status="error", error=f"{type(e).__name__}: {e}")


def run_experiments(config: ExperimentConfig, run_dir: Path) -> List[ExperimentOutcome]:
    """Runs the configured experiment, or every member of a full_suite, in a stable order."""
    kinds = list(config.experiment.kinds) if config.experiment.kind == "full_suite" else [config.experiment.kind]
    if config.experiment.parallel and len(kinds) > 1:
        with ThreadPoolExecutor() as pool:
            return list(pool.map(lambda k: _run_one(k, config, run_dir), kinds))
    return [_run_one(kind, config, run_dir) for kind in kinds]


def cmd_run(args: argparse.Namespace) -> int:
    config = load_config(args.config, args.set or ())
    root = Config.output_root(config.output_dir)
    Config.ensure_dirs(config.output_dir)
    run_dir = make_run_dir(root)
    sink = logger.add(run_dir / "run.log", level="DEBUG")
    logger.info("--- INITIALIZING HJB LAB RUN {} (config {}) ---", run_dir.name, config.digest()[:12])

    try:
        started = utc_iso()
        outcomes = run_experiments(config, run_dir)
        manifest = RunManifest.build(config, outcomes, run_dir, started)
        path = manifest.write(run_dir)
        logger.info("Manifest written to {}", path)

        logger.info("--- GENERATING FINAL REPORT ---")
        HTMLGenerator().generate_report(outcomes, run_dir.name)

        for outcome in outcomes:
            logger.info("{:<18} {}", outcome.kind, outcome.status.upper())
        logger.info("--- PROCESS COMPLETE ---")
        return EXIT_PASS if manifest.passed else EXIT_FAIL
    finally:
        logger.remove(sink)


def cmd_plotdata(args: argparse.Namespace) -> int:
    files = emit_plotdata(args.manifest, args.target)
    for path in files:
        print(path)
    return EXIT_PASS


def cmd_calibrate(args: argparse.Namespace) -> int:
    suite = load_suite(args.suite)
    problems = []
    for problem in suite.problems:
        grid = problem.domain.build()
        d = discretize(operator_from_config(problem.operator, grid), grid)
        ctx = prepare_problem(d, Field.from_expression(grid, problem.h), suite.solver)
        problems.append((problem.label, ctx, problem.offsets))

    result = calibrate(problems, safety=suite.safety)
    target = Path(args.output) if args.output else Config.output_root() / suite.output_file
    result.write(target)
    logger.info("C0 = {:.4f}, T0 = {:.4f} written to {}", result.c_cal, result.t0_cal, target)
    return EXIT_PASS


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hjblab", description="Numerical laboratory for HJB Dirichlet problems")
    parser.add_argument("--log-level", default=None, help="Overrides HJBLAB_LOG_LEVEL")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="Run the experiment(s) of a TOML config")
    run.add_argument("config")
    run.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE", help="Override one config field")
    run.set_defaults(func=cmd_run)

    plot = sub.add_parser("plotdata", help="Plot-ready CSVs from a run manifest")
    plot.add_argument("manifest")
    plot.add_argument("--target", default=None, help="Output directory (default: <run>/plotdata)")
    plot.set_defaults(func=cmd_plotdata)

    cal = sub.add_parser("calibrate", help="Measure the a-priori constants on a calibration suite")
    cal.add_argument("suite")
    cal.add_argument("--output", default=None, help="calibration.json path")
    cal.set_defaults(func=cmd_calibrate)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)
    try:
        return args.func(args)
    except ConfigError as e:
        logger.error("Configuration error: {}", e)
        return EXIT_CONFIG
    except HJBLabError as e:
        logger.error("{}: {}", type(e).__name__, e)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
