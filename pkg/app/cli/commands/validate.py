import logging

from app.cli.commands.common import EXIT_DOMAIN, EXIT_OK, add_common_arguments, run_command
from app.cli.schemas import ValidationSection
from app.network.model import validate_spec

log = logging.getLogger(__name__)

COMMAND = "validate"


def register_command(subparsers):
    parser = subparsers.add_parser(COMMAND, help="Vérifie les hypothèses structurelles du réseau")
    add_common_arguments(parser)
    return COMMAND


def execute_command(args):
    def body(spec, report):
        validation = validate_spec(spec)
        report.validation = ValidationSection.from_report(validation)
        return EXIT_OK if validation.ok else EXIT_DOMAIN

    return run_command(args, {}, body)
