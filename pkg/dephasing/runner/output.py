# runner/output.py
import json
import logging
import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

import dephasing

from .config import flatten_config

logger = logging.getLogger(__name__)

VALUE_FORMAT = "%.12e"
HEADER = re.compile(r"^(?P<name>[^\[\]]+)\[(?P<unit>[^\[\]]*)\]$")


@dataclass(frozen=True, eq=False)
class Table:
    """
    One CSV artifact.

    Attributes:
        name (str): File stem.
        columns (list[str]): Headers "name[unit]".
        rows (ndarray): Shape (rows, columns).
        plot (tuple[str, ...]): Column names of the default plot, x first;
            empty for no plot.
    """

    name: str
    columns: list
    rows: np.ndarray
    plot: tuple = field(default=())

    def __post_init__(self):
        rows = np.atleast_2d(np.asarray(self.rows, dtype=float))
        if rows.shape[1] != len(self.columns):
            raise ValueError(
                f"Table {self.name!r} has {rows.shape[1]} columns, {len(self.columns)} headers."
            )
        for header in self.columns:
            if not HEADER.match(header):
                raise ValueError(f"Header {header!r} is not of the form name[unit].")
        object.__setattr__(self, "rows", rows)


def column_name(header):
    """'delta_n[atoms]' -> 'delta_n'."""
    match = HEADER.match(header.strip())
    return match.group("name") if match else header.strip()


def write_csv(path, columns, rows):
    """
    Writes a header row and rows formatted with %.12e.

    Identical arrays always produce identical bytes.
    """
    path = Path(path)
    lines = [",".join(columns)]
    lines += [",".join(VALUE_FORMAT % value for value in row) for row in np.atleast_2d(rows)]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.debug("csv: %s (%d rows)", path, len(lines) - 1)
    return path


def read_csv(path):
    """
    Reads a CSV written by `write_csv`.

    Returns:
        tuple[list[str], ndarray]: Headers and a (rows, columns) array,
        empty with shape (0, columns) when there are no data rows.
    """
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    if not lines:
        raise ValueError(f"{path} has no header row.")
    columns = [header.strip() for header in lines[0].split(",")]
    rows = [[float(value) for value in line.split(",")] for line in lines[1:]]
    data = np.array(rows, dtype=float) if rows else np.empty((0, len(columns)))
    return columns, data


def _json_safe(value):
    if isinstance(value, dict):
        return {str(key): _json_safe(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [_json_safe(item) for item in value]
    if isinstance(value, (np.floating, np.integer, np.bool_)):
        value = value.item()
    if isinstance(value, float) and not math.isfinite(value):
        return "nan" if math.isnan(value) else ("inf" if value > 0 else "-inf")
    if isinstance(value, complex):
        return [value.real, value.imag]
    return value


def write_manifest(directory, subcommand, config, artifacts, summary=None, diagnostics=None,
                   status="ok"):
    """
    Writes manifest.json: resolved config, code version, artifacts and results.

    The config entry holds the flattened key=value pairs, so the manifest
    can be passed back as --config to repeat the run.
    """
    payload = {
        "subcommand": subcommand,
        "code_version": dephasing.__version__,
        "status": status,
        "config": _nested_text(config),
        "artifacts": sorted(artifacts),
        "summary": _json_safe(summary or {}),
        "diagnostics": _json_safe(diagnostics or {}),
    }
    path = Path(directory) / "manifest.json"
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return path


def _nested_text(config):
    nested = {}
    for key, value in flatten_config(config).items():
        block, _, name = key.partition(".")
        nested.setdefault(block, {})[name] = value
    return nested
