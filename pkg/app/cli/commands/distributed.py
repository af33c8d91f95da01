import logging

import numpy as np

from app.cli.commands.common import EXIT_OK, add_common_arguments, run_command
from app.cli.schemas import DistributedSection, ValidationSection
from app.config.settings import settings
from app.distributed.harness import flow_balance_rounds, run_until_converged
from app.network.flowbalance import solve_flow_balance
from app.network.model import validate_spec
from app.network.spectral import perron_eigenpair
from app.services.exceptions import InvalidSpecError, NoConvergenceError
from app.storage.reports import write_trace

log = logging.getLogger(__name__)

COMMAND = "distributed"


def register_command(subparsers):
    parser = subparsers.add_parser(COMMAND, help="Itération orthogonale modifiée entre pairs simulés")
    add_common_arguments(parser)
    parser.add_argument("--tol", type=float, default=None, help="Seuil sur les variations de v et de B")
    parser.add_argument("--max-rounds", type=int, default=None, help="Nombre maximal de rondes")
    parser.add_argument("--trace", default=None, help="Trace par ronde (JSON lines)")
    parser.add_argument("--seed", type=int, default=None, help="v₀ aléatoire (défaut : tout-à-un)")
    parser.add_argument("--workers", type=int, default=1, help="Threads pour les calculs locaux des pairs")
    return COMMAND


def execute_command(args):
    options = {
        "tol": settings.distributed_tol if args.tol is None else args.tol,
        "max_rounds": settings.distributed_max_rounds if args.max_rounds is None else args.max_rounds,
        "trace": args.trace,
        "seed": args.seed,
        "workers": args.workers,
    }

    def body(spec, report):
        validation = validate_spec(spec)
        report.validation = ValidationSection.from_report(validation)
        if not validation.ok:
            raise InvalidSpecError(validation).with_stage("validate")

        try:
            result = run_until_converged(
                spec,
                tol=options["tol"],
                max_rounds=options["max_rounds"],
                seed=options["seed"],
                workers=options["workers"],
            )
        except NoConvergenceError as exc:
            if args.trace:
                write_trace(exc.last_state.get("trace") or [], args.trace)
            raise
        if args.trace:
            write_trace(result.trace, args.trace)

        loads = flow_balance_rounds(
            spec, tol=options["tol"], max_rounds=options["max_rounds"], workers=options["workers"]
        )

        flow = solve_flow_balance(spec)
        eig = perron_eigenpair(flow.b_tilde)
        report.distributed = DistributedSection(
            rounds_used=result.rounds_used,
            message_count=result.message_count + loads.message_count,
            kappa=result.kappa,
            v=result.v.tolist(),
            b=result.b.tolist(),
            lambda_total=loads.lambda_total.tolist(),
            load_rounds=loads.rounds_used,
            max_v_deviation=float(np.abs(result.v - eig.v).max()),
            max_b_deviation=float(np.abs(result.b - flow.b).max()),
            max_lambda_deviation=float(np.abs(loads.lambda_total - flow.lambda_total).max()),
        )
        return EXIT_OK

    return run_command(args, options, body)
