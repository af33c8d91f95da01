"""
Point d'entrée opérateur.

Usage:
    python -m app.cli validate --input fixtures/three_peer.json
    python -m app.cli allocate --input fixtures/three_peer.json --feasibility augment
    python run_cli.py simulate --input fixtures/two_node.json --horizon 50000 --seed 7
    python -m app.cli --input fixtures/three_peer.json --format csv solve
"""

from typing import List, Optional
import argparse
import logging

from app.cli.commands import COMMANDS
from app.cli.commands.common import add_common_arguments
from app.config.logging_config import setup_logging

logger = logging.getLogger(__name__)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="goldenrule",
        description="Allocation de capacité golden-rule pour réseaux pair-à-pair",
    )
    parser.add_argument("--log-level", default=None, help="Niveau de journalisation (DEBUG, INFO, ...)")
    add_common_arguments(parser, top_level=True)
    subparsers = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS.values():
        module.register_command(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.input is None:
            parser.error("the following arguments are required: --input")
    except SystemExit as exc:
        return int(exc.code or 0)

    setup_logging(args.log_level)
    logger.debug(f"Commande {args.command} : {vars(args)}")
    return COMMANDS[args.command].execute_command(args)
