import argparse
import logging
from dataclasses import asdict

import numpy as np

from app.allocation.golden_rule import FeasibilityMode
from app.allocation.pipeline import golden_rule_pipeline
from app.cli.commands.allocate import add_feasibility_arguments, pipeline_sections, resolve_pipeline_options
from app.cli.commands.common import EXIT_OK, add_common_arguments, run_command
from app.cli.schemas import EstimateModel, GoldenRuleSection, SimulationSection, ValidationSection
from app.config.settings import settings
from app.network.model import validate_spec
from app.services.exceptions import DimensionMismatchError, InvalidSpecError
from app.simulation.golden_rule_check import verify_golden_rule
from app.simulation.jackson_sim import SimConfig, simulate

log = logging.getLogger(__name__)

COMMAND = "simulate"

METRICS = (
    "l_local",
    "l_foreign",
    "l_cross",
    "local_delay",
    "foreign_delay",
    "system_time",
    "visit_rate",
    "throughput",
    "arrival_rate",
    "disutility",
)


def parse_rates(text: str):
    try:
        return [float(x) for x in text.split(",")]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'") from exc


def register_command(subparsers):
    parser = subparsers.add_parser(COMMAND, help="Simulation à événements discrets du réseau de Jackson")
    add_common_arguments(parser)
    add_feasibility_arguments(parser)
    parser.add_argument("--horizon", type=int, default=None, help="Arrivées exogènes par réplication")
    parser.add_argument("--seed", type=int, default=None, help="Graine des flux aléatoires")
    parser.add_argument("--replications", type=int, default=None, help="Nombre de réplications")
    parser.add_argument("--warmup", type=float, default=None, help="Fraction de l'horizon écartée")
    parser.add_argument("--workers", type=int, default=None, help="Processus pour les réplications")
    parser.add_argument(
        "--mu0",
        type=parse_rates,
        default=None,
        help="Partage local explicite a,b,c (remplace le partage golden-rule)",
    )
    return COMMAND


def execute_command(args):
    pipeline_options = resolve_pipeline_options(args)
    options = {
        "horizon": settings.sim_horizon if args.horizon is None else args.horizon,
        "seed": settings.sim_seed if args.seed is None else args.seed,
        "replications": settings.sim_replications if args.replications is None else args.replications,
        "warmup": settings.sim_warmup if args.warmup is None else args.warmup,
        "workers": settings.sim_workers if args.workers is None else args.workers,
        "batches": settings.sim_batches,
        "mu0": args.mu0,
        "feasibility": str(FeasibilityMode.parse(pipeline_options.feasibility).value),
        "margin": pipeline_options.margin,
    }

    def body(spec, report):
        validation = validate_spec(spec)
        report.validation = ValidationSection.from_report(validation)
        if not validation.ok:
            raise InvalidSpecError(validation).with_stage("validate")
        result = None
        alpha = None
        if args.mu0 is not None:
            mu0 = np.asarray(args.mu0, dtype=float)
            if mu0.shape != (spec.n,):
                raise DimensionMismatchError("mu0", (spec.n,), mu0.shape)
            sim_spec = spec
        else:
            result = golden_rule_pipeline(spec, pipeline_options)
            pipeline_sections(result, report)
            mu0, alpha, sim_spec = result.allocation.mu0, result.allocation.alpha, result.spec

        config = SimConfig(
            spec=sim_spec,
            mu0=mu0,
            horizon=options["horizon"],
            warmup=options["warmup"],
            seed=options["seed"],
            replications=options["replications"],
            batches=options["batches"],
            alpha=alpha,
            workers=options["workers"],
        )
        sim = simulate(config)

        golden = None
        if result is not None:
            table = verify_golden_rule(sim, result.flow, result.allocation)
            golden = GoldenRuleSection(
                ratios=table.ratios.tolist(),
                analytic_ratios=table.analytic_ratios.tolist(),
                kappa=table.kappa,
                spread=table.spread,
                max_deviation=table.max_deviation,
            )

        metrics = {}
        for name in METRICS:
            estimate = getattr(sim, name)
            if estimate is not None:
                metrics[name] = EstimateModel(mean=estimate.mean.tolist(), se=estimate.se.tolist())
        report.simulation = SimulationSection(
            mu0=[float(x) for x in mu0],
            metrics=metrics,
            event_count=sim.event_count,
            sim_time=sim.sim_time,
            replications=[asdict(summary) for summary in sim.replications],
            golden_rule=golden,
        )
        return EXIT_OK

    return run_command(args, options, body)
