# runner/runs.py
import logging
from pathlib import Path

from core.exceptions import NumericalFailure

from .output import write_csv, write_manifest
from .pipelines import PIPELINES
from .plotting import PlotError, emit_plot

logger = logging.getLogger(__name__)


def output_directory(config, out_dir=None):
    directory = Path(out_dir or config["output"]["directory"])
    directory.mkdir(parents=True, exist_ok=True)
    return directory


def execute_run(subcommand, config, out_dir=None):
    """
    Runs one pipeline and writes its artifacts and manifest.

    Args:
        subcommand (str): Key of `PIPELINES`.
        config (dict): Validated configuration from `load_config`.
        out_dir (str or Path, optional): Overrides output.directory.

    Returns:
        tuple[Path, PipelineResult]: The output directory and the result.

    Raises:
        NumericalFailure: Re-raised after a manifest with status "failed"
            and the failure diagnostics has been written.
    """
    directory = output_directory(config, out_dir)
    logger.info("%s: writing to %s", subcommand, directory)
    try:
        result = PIPELINES[subcommand](config)
    except NumericalFailure as error:
        diagnostics = dict(error.diagnostics, error=str(error), kind=type(error).__name__)
        write_manifest(directory, subcommand, config, [], diagnostics=diagnostics,
                       status="failed")
        logger.error("%s failed: %s", subcommand, error)
        raise

    artifacts = []
    for table in result.tables:
        csv_path = write_csv(directory / f"{table.name}.csv", table.columns, table.rows)
        artifacts.append(csv_path.name)
        if config["output"]["emit_svg"] and table.plot:
            try:
                svg_path = emit_plot(csv_path, table.plot, directory / f"{table.name}.svg")
            except PlotError as error:
                logger.warning("%s: no plot for %s (%s)", subcommand, table.name, error)
            else:
                artifacts.append(svg_path.name)
    write_manifest(directory, subcommand, config, artifacts, result.summary, result.diagnostics)
    return directory, result
