"""Options communes, chargement du fichier réseau et exécution gardée des commandes."""

from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Dict
import argparse
import json
import logging

from pydantic import ValidationError

from app import __version__
from app.cli.schemas import ErrorSection, NetworkFile, RunManifest, RunReport
from app.network.model import NetworkSpec
from app.services.exceptions import DimensionMismatchError, GoldenRuleError, SpecParseError
from app.storage.reports import write_report

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DOMAIN = 1
EXIT_USAGE = 2


def add_common_arguments(parser: argparse.ArgumentParser, top_level: bool = False) -> None:
    """Options globales, acceptées avant ou après la sous-commande.

    Au niveau des sous-commandes, les défauts sont supprimés pour ne pas écraser
    une valeur donnée avant la sous-commande.
    """
    suppress = {} if top_level else {"default": argparse.SUPPRESS}
    parser.add_argument("--input", help="Fichier JSON du réseau (peers + routing)", **suppress)
    parser.add_argument("--output", help="Fichier de sortie (défaut : sortie standard)", **suppress)
    parser.add_argument(
        "--format",
        choices=["json", "csv"],
        help="Format du rapport",
        **({"default": "json"} if top_level else suppress),
    )


def load_spec(path: str) -> NetworkSpec:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SpecParseError(f"Cannot read network file '{path}': {exc}", {"path": path}) from exc
    try:
        network = NetworkFile.model_validate(json.loads(text))
    except (json.JSONDecodeError, ValidationError) as exc:
        raise SpecParseError(f"Malformed network file '{path}': {exc}", {"path": path}) from exc
    return network.to_spec()


def run_command(
    args: argparse.Namespace,
    options: Dict[str, Any],
    body: Callable[[NetworkSpec, RunReport], int],
) -> int:
    """Charge le réseau, exécute `body` et écrit le rapport, erreur comprise.

    Codes de sortie : 0 succès, 1 échec du domaine, 2 fichier illisible ou mal formé.
    """
    report = RunReport(
        manifest=RunManifest(
            subcommand=args.command,
            input_path=str(args.input),
            options=options,
            version=__version__,
            timestamp=datetime.now(timezone.utc),
        )
    )
    try:
        spec = load_spec(args.input)
        code = body(spec, report)
    except (SpecParseError, DimensionMismatchError) as exc:
        logger.error(f"❌ Entrée invalide : {exc}")
        report.error = ErrorSection.from_exception(exc)
        code = EXIT_USAGE
    except GoldenRuleError as exc:
        logger.error(f"❌ {exc.code} ({exc.stage or args.command}) : {exc}")
        report.error = ErrorSection.from_exception(exc)
        code = EXIT_DOMAIN

    write_report(report, args.format, args.output)
    return code
