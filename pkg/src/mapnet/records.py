"""records"""

from __future__ import annotations
from pathlib import Path
from typing import Any
import json
import logging

import pandas as pd

from mapnet.config import MapnetConfig
from mapnet.errors import EmptyRecordError, RecordFormatError


logger = logging.getLogger(__name__)

RECORD_FORMAT = 1
ROW_ORDER = ("arm", "episode", "t")


def record_header(config: MapnetConfig, kind: str, **extra: Any) -> dict[str, Any]:
    """
    First line of every record file: format, kind (`eval`, `compare`, `trace`, `curve`), the resolved config and
    its hash. Nothing time dependent goes in, so reruns produce identical files.
    """

    return {
        "record_format": RECORD_FORMAT,
        "kind": kind,
        "config": config.resolved(),
        "config_hash": config.config_hash(),
        **extra,
    }


def sort_rows(rows: list[dict[str, Any]], order: tuple[str, ...] = ROW_ORDER) -> list[dict[str, Any]]:
    return sorted(rows, key=lambda row: tuple(row.get(k, 0) for k in order))


def dumps_row(row: dict[str, Any]) -> str:
    return json.dumps(row, sort_keys=True, separators=(",", ":"))


def write_records(
    path: str | Path, header: dict[str, Any], rows: list[dict[str, Any]], order: tuple[str, ...] | None = ROW_ORDER
) -> Path:
    """
    Write a newline delimited record file: one header line, then one line per row.

    Parameters
    ----------
    path : `str | Path`
    header : `dict[str, Any]`
        See `record_header`
    rows : `list[dict[str, Any]]`
        JSON serialisable rows
    order : `tuple[str, ...] | None`
        Columns the rows are sorted by before writing, `None` keeps the given order

    Returns
    -------
    `Path`
    """

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    if order is not None:
        rows = sort_rows(rows, order)

    with open(path, "w", encoding="utf-8") as f:
        f.write(dumps_row(header) + "\n")
        for row in rows:
            f.write(dumps_row(row) + "\n")

    logger.info("wrote %d rows to %s", len(rows), path)
    return path


def read_records(path: str | Path) -> tuple[dict[str, Any], list[dict[str, Any]]]:
    """
    Read a record file written by `write_records`.

    Raises
    ------
    `EmptyRecordError`
        The file is missing or holds no header
    `RecordFormatError`
        A line is not valid JSON
    """

    path = Path(path)
    if not path.exists():
        raise EmptyRecordError(f"no records at {path}")

    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise EmptyRecordError(f"{path} is empty")

    try:
        header = json.loads(lines[0])
        rows = [json.loads(line) for line in lines[1:]]
    except json.JSONDecodeError as e:
        raise RecordFormatError(f"{path}: {e}") from e

    if header.get("record_format") != RECORD_FORMAT:
        raise RecordFormatError(f"{path} has no record header")

    return header, rows


def records_frame(rows: list[dict[str, Any]]) -> pd.DataFrame:
    """Slot rows as a data frame, nested columns (thetas, decisions) dropped"""

    if not rows:
        raise EmptyRecordError("no slot rows")

    frame = pd.DataFrame(rows)
    return frame.drop(columns=[c for c in ("thetas", "decisions") if c in frame.columns])
