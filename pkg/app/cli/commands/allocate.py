import logging

from app.allocation.golden_rule import FeasibilityMode, golden_rule_residuals
from app.allocation.pipeline import PipelineOptions, golden_rule_pipeline
from app.cli.commands.common import EXIT_OK, add_common_arguments, run_command
from app.cli.schemas import (
    AllocationSection,
    EigenSection,
    FlowSection,
    QueueStatsSection,
    ValidationSection,
)
from app.config.settings import settings
from app.network.flowbalance import feasibility_threshold
from app.network.model import validate_spec

log = logging.getLogger(__name__)

COMMAND = "allocate"


def add_feasibility_arguments(parser):
    parser.add_argument(
        "--feasibility",
        choices=[mode.value for mode in FeasibilityMode],
        default=None,
        help="Comportement si μ_i ≤ 1/v_i + Λ_i : échec, augmentation de capacité ou amincissement",
    )
    parser.add_argument("--margin", type=float, default=None, help="Marge relative de mise en faisabilité")


def resolve_pipeline_options(args) -> PipelineOptions:
    return PipelineOptions(
        feasibility=args.feasibility or settings.feasibility_mode,
        margin=settings.feasibility_margin if args.margin is None else args.margin,
        tol=settings.eigen_tol if getattr(args, "tol", None) is None else args.tol,
        max_iters=settings.eigen_max_iters,
    )


def pipeline_sections(result, report) -> None:
    report.flow = FlowSection.from_solution(result.flow)
    report.eigen = EigenSection.from_pair(result.eigen, feasibility_threshold(result.flow, result.eigen))
    report.allocation = AllocationSection.from_allocation(
        result.allocation,
        result.spec,
        result.adjusted,
        golden_rule_residuals(result.flow, result.allocation),
        spread=result.proportionality_spread,
        proportional=result.proportional,
    )
    report.queue_stats = QueueStatsSection.from_stats(result.stats)


def register_command(subparsers):
    parser = subparsers.add_parser(COMMAND, help="Paramètres α de la règle d'or et partage de Nash μ₀")
    add_common_arguments(parser)
    add_feasibility_arguments(parser)
    parser.add_argument("--tol", type=float, default=None, help="Tolérance sur le résidu propre")
    return COMMAND


def execute_command(args):
    pipeline_options = resolve_pipeline_options(args)
    options = {
        "feasibility": str(FeasibilityMode.parse(pipeline_options.feasibility).value),
        "margin": pipeline_options.margin,
        "tol": pipeline_options.tol,
        "max_iters": pipeline_options.max_iters,
    }

    def body(spec, report):
        report.validation = ValidationSection.from_report(validate_spec(spec))
        result = golden_rule_pipeline(spec, pipeline_options)
        pipeline_sections(result, report)
        log.info(f"α = {result.allocation.alpha.tolist()}")
        return EXIT_OK

    return run_command(args, options, body)
