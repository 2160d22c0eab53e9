# runner/plotting.py
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

from django.conf import settings  # noqa: E402
from matplotlib.figure import Figure  # noqa: E402

from .output import column_name, read_csv  # noqa: E402

logger = logging.getLogger(__name__)


class PlotError(ValueError):
    """The requested plot cannot be drawn from the CSV."""


def _index(columns, wanted):
    names = [column_name(header) for header in columns]
    for candidate in (wanted, column_name(wanted)):
        if candidate in columns:
            return columns.index(candidate)
        if candidate in names:
            return names.index(candidate)
    raise PlotError(
        f"Column {wanted!r} not found; available columns: {', '.join(names)}."
    )


def emit_plot(csv_path, columns, out_path):
    """
    Draws columns[1:] against columns[0] as an SVG line plot.

    The canvas size, the SVG id salt and the absent date metadata make the
    output byte-identical for identical CSV input.

    Args:
        csv_path (str or Path): CSV written by `write_csv`.
        columns (Sequence[str]): x column then one or more y columns, by
            name with or without the unit suffix.
        out_path (str or Path): Target .svg file.

    Returns:
        Path: The written file.

    Raises:
        PlotError: If a column is missing (the message lists the available
            ones), fewer than two columns are named, or the CSV has no
            data rows. No file is written then.
    """
    headers, data = read_csv(csv_path)
    if len(columns) < 2:
        raise PlotError("Name an x column and at least one y column.")
    indices = [_index(headers, name) for name in columns]
    if len(data) == 0:
        raise PlotError(f"{csv_path} has no data rows.")

    figure = Figure(figsize=settings.DEPHASING["PLOT_SIZE_INCHES"])
    axes = figure.add_subplot()
    x_index, *y_indices = indices
    for index in y_indices:
        axes.plot(data[:, x_index], data[:, index], label=headers[index], linewidth=1.0)
    axes.set_xlabel(headers[x_index])
    if len(y_indices) == 1:
        axes.set_ylabel(headers[y_indices[0]])
    else:
        axes.legend()
    axes.grid(True, linewidth=0.3)
    figure.tight_layout()

    out_path = Path(out_path)
    with matplotlib.rc_context({"svg.hashsalt": settings.DEPHASING["SVG_HASH_SALT"]}):
        figure.savefig(out_path, format="svg", metadata={"Date": None})
    logger.info("plot: %s", out_path)
    return out_path
