from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Union
import io
import logging
import sys

import pandas as pd

from app.cli.schemas import RoundTrace, RunReport

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["section", "name", "i", "j", "value"]


def _format(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def _rows(section: str, name: str, value: Any) -> Iterable[Dict[str, Any]]:
    """Aplatit scalaires, vecteurs et matrices en lignes (indices à partir de 1)."""
    if isinstance(value, dict):
        for key, inner in value.items():
            yield from _rows(section, f"{name}.{key}" if name else key, inner)
    elif isinstance(value, list) and value and isinstance(value[0], list):
        for i, row in enumerate(value, start=1):
            for j, item in enumerate(row, start=1):
                yield {"section": section, "name": name, "i": i, "j": j, "value": _format(item)}
    elif isinstance(value, list):
        if value and isinstance(value[0], dict):
            for i, item in enumerate(value, start=1):
                yield from _rows(section, f"{name}[{i}]", item)
        else:
            for i, item in enumerate(value, start=1):
                yield {"section": section, "name": name, "i": i, "j": None, "value": _format(item)}
    elif value is not None:
        yield {"section": section, "name": name, "i": None, "j": None, "value": _format(value)}


def flatten_report(report: RunReport) -> pd.DataFrame:
    """Rapport en lignes `section,name,i,j,value`, matrices en ordre ligne par ligne."""
    rows: List[Dict[str, Any]] = []
    data = report.model_dump(mode="json")
    for section, content in data.items():
        if content is None:
            continue
        rows.extend(_rows(section, "", content))
    frame = pd.DataFrame(rows, columns=CSV_COLUMNS)
    frame["i"] = frame["i"].astype("Int64")
    frame["j"] = frame["j"].astype("Int64")
    return frame


def render_report(report: RunReport, fmt: str = "json") -> str:
    if fmt == "csv":
        buffer = io.StringIO()
        flatten_report(report).to_csv(buffer, index=False)
        return buffer.getvalue()
    return report.model_dump_json(indent=2) + "\n"


def write_report(report: RunReport, fmt: str = "json", output: Optional[Union[str, Path]] = None) -> None:
    """Écrit le rapport sur la sortie standard ou dans `output`."""
    text = render_report(report, fmt)
    if output is None or str(output) == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    path = Path(output)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")
    logger.info(f"Rapport écrit dans {path}")


def write_trace(trace: List[Dict[str, Any]], path: Union[str, Path]) -> None:
    """Trace par ronde au format JSON lines (une ligne par ronde)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [RoundTrace(**record).model_dump_json() + "\n" for record in trace]
    path.write_text("".join(lines), encoding="utf-8")
