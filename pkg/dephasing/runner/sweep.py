# runner/sweep.py
"""
Parameter sweeps: one run per grid point, each in its own subdirectory,
aggregated into sweep.csv.
"""
import concurrent.futures
import itertools
import logging
import math
import numbers

import numpy as np

from core.exceptions import NumericalFailure

from .config import with_overrides
from .output import Table, write_csv, write_manifest
from .runs import execute_run, output_directory
from .serializers import sweep_axes

logger = logging.getLogger(__name__)


def sweep_points(config):
    """
    Validated configurations of every grid point.

    Returns:
        list[tuple[dict, dict]]: (overrides by key, point configuration)
        in row-major order of the axes.

    Raises:
        serializers.ValidationError: If a swept value fails validation.
    """
    axes = sweep_axes(config["sweep"])
    points = []
    for values in itertools.product(*(axis_values for _, axis_values in axes)):
        overrides = {key: value for (key, _), value in zip(axes, values)}
        point = with_overrides(config, [f"{key}={value}" for key, value in overrides.items()])
        points.append((overrides, point))
    return points


def _scalar(value):
    return isinstance(value, numbers.Real) and not isinstance(value, bool)


def _axis_value(point, key, values, raw):
    block, _, name = key.partition(".")
    value = point[block][name]
    return float(value) if _scalar(value) else float(values.index(raw))


def _run_point(target, point, directory):
    try:
        _, result = execute_run(target, point, directory)
    except NumericalFailure as error:
        logger.warning("sweep point %s failed: %s", directory.name, error)
        return {}, "failed"
    return result.summary, "ok"


def run_sweep(config, out_dir=None):
    """
    Runs sweep.target over the configured axes.

    Points run concurrently on sweep.workers threads. A point that fails
    numerically keeps its own failed manifest and shows up with NaN values
    in sweep.csv.

    Returns:
        tuple[Path, Table]: The sweep directory and the aggregated table.
    """
    sweep = config["sweep"]
    axes = sweep_axes(sweep)
    if not axes:
        raise ValueError("A sweep needs sweep.first and sweep.first_values.")
    directory = output_directory(config, out_dir)
    points = sweep_points(config)
    logger.info("sweep: %d points of %s on %d workers", len(points), sweep["target"],
                sweep["workers"])

    with concurrent.futures.ThreadPoolExecutor(max_workers=sweep["workers"]) as executor:
        futures = [
            executor.submit(_run_point, sweep["target"], point, directory / f"point_{index:03d}")
            for index, (_, point) in enumerate(points)
        ]
        outcomes = [future.result() for future in futures]

    summaries = [summary for summary, _ in outcomes]
    keys = sorted({key for summary in summaries for key, value in summary.items()
                   if _scalar(value)})
    rows = []
    for (overrides, point), summary in zip(points, summaries):
        row = [_axis_value(point, key, values, overrides[key]) for key, values in axes]
        row += [float(summary.get(key, math.nan)) for key in keys]
        rows.append(row)
    columns = [f"{key}[-]" for key, _ in axes] + [f"{key}[-]" for key in keys]
    table = Table("sweep", columns, np.array(rows, dtype=float))
    write_csv(directory / "sweep.csv", table.columns, table.rows)

    artifacts = ["sweep.csv"] + [f"point_{index:03d}/manifest.json"
                                 for index in range(len(points))]
    failed = sum(status == "failed" for _, status in outcomes)
    write_manifest(directory, "sweep", config, artifacts,
                   summary={"points": len(points), "failed": failed,
                            "target": sweep["target"]},
                   status="ok" if not failed else "partial")
    return directory, table
