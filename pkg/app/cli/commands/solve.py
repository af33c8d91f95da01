import logging

from app.cli.commands.common import EXIT_OK, add_common_arguments, run_command
from app.cli.schemas import EigenSection, FlowSection, ValidationSection
from app.config.settings import settings
from app.network.flowbalance import feasibility_threshold, solve_flow_balance
from app.network.model import validate_spec
from app.network.spectral import perron_eigenpair
from app.services.exceptions import InvalidSpecError

log = logging.getLogger(__name__)

COMMAND = "solve"


def register_command(subparsers):
    parser = subparsers.add_parser(COMMAND, help="Équilibre des flux (B, Λ) et couple de Perron (κ, v)")
    add_common_arguments(parser)
    parser.add_argument("--tol", type=float, default=None, help="Tolérance sur le résidu propre")
    parser.add_argument("--max-iters", type=int, default=None, help="Nombre maximal d'itérations")
    return COMMAND


def execute_command(args):
    options = {
        "tol": settings.eigen_tol if args.tol is None else args.tol,
        "max_iters": settings.eigen_max_iters if args.max_iters is None else args.max_iters,
    }

    def body(spec, report):
        validation = validate_spec(spec)
        report.validation = ValidationSection.from_report(validation)
        if not validation.ok:
            raise InvalidSpecError(validation).with_stage("validate")

        flow = solve_flow_balance(spec)
        report.flow = FlowSection.from_solution(flow)
        eig = perron_eigenpair(flow.b_tilde, tol=options["tol"], max_iters=options["max_iters"])
        report.eigen = EigenSection.from_pair(eig, feasibility_threshold(flow, eig))
        log.info(f"κ = {eig.kappa:.10g}")
        return EXIT_OK

    return run_command(args, options, body)
