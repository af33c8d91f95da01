import logging
from logging.config import dictConfig
from typing import Optional

from .settings import settings


def setup_logging(level: Optional[str] = None) -> None:
    """Configure le logging applicatif.

    La sortie console part sur stderr : stdout est réservé aux rapports
    produits par la CLI.
    """
    level = (level or settings.log_level).upper()
    handlers = ["console"]

    config = {
        "version": 1,
        "disable_existing_loggers": False,
        "formatters": {
            "standard": {
                "format": "%(asctime)s | %(levelname)s | %(name)s | %(message)s",
            },
        },
        "handlers": {
            "console": {
                "class": "logging.StreamHandler",
                "level": level,
                "formatter": "standard",
                "stream": "ext://sys.stderr",
            },
        },
        "root": {
            "level": level,
            "handlers": handlers,
        },
    }

    if settings.log_to_file:
        settings.logs_dir.mkdir(parents=True, exist_ok=True)
        config["handlers"]["file"] = {
            "class": "logging.handlers.RotatingFileHandler",
            "level": level,
            "formatter": "standard",
            "filename": str(settings.logs_dir / "goldenrule.log"),
            "maxBytes": settings.log_max_bytes,
            "backupCount": settings.log_backup_count,
            "encoding": "utf-8",
        }
        handlers.append("file")

    dictConfig(config)
    logging.getLogger(__name__).debug(f"Logging initialisé (niveau {level})")


if __name__ == "__main__":
    setup_logging()
