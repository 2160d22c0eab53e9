import logging

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from rest_framework import serializers

from core.exceptions import NumericalFailure
from runner.config import load_config
from runner.runs import execute_run
from runner.serializers import SUBCOMMANDS
from runner.sweep import run_sweep

CONFIG_ERROR = 2
NUMERICAL_FAILURE = 3

VERBOSITY_LEVELS = {0: logging.WARNING, 1: logging.INFO}


class Command(BaseCommand):
    help = (
        "Runs one physics pipeline (or a sweep over one) and writes CSV artifacts "
        "and manifest.json to the output directory."
    )

    def add_arguments(self, parser):
        parser.add_argument("subcommand", choices=SUBCOMMANDS)
        parser.add_argument("--config", help="key=value configuration file or run manifest.")
        parser.add_argument(
            "--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
            help="Override one configuration key; repeatable.",
        )
        parser.add_argument("--out", help="Output directory (overrides output.directory).")
        parser.add_argument("--svg", action="store_true", help="Also emit SVG plots.")

    def handle(self, *args, **options):
        self._set_log_level(options["verbosity"])
        subcommand = options["subcommand"]
        overrides = list(options["overrides"])
        if options["svg"]:
            overrides.append("output.emit_svg=true")
        try:
            config = load_config(options["config"], overrides)
            if subcommand == "sweep":
                directory, table = run_sweep(config, options["out"])
                message = f"sweep: {len(table.rows)} points in {directory}"
            else:
                directory, _ = execute_run(subcommand, config, options["out"])
                message = f"{subcommand}: artifacts in {directory}"
        except serializers.ValidationError as error:
            raise CommandError(f"Invalid configuration: {error.detail}", returncode=CONFIG_ERROR)
        except NumericalFailure as error:
            raise CommandError(f"Numerical failure: {error}", returncode=NUMERICAL_FAILURE)
        except ValueError as error:
            raise CommandError(str(error), returncode=CONFIG_ERROR)
        if options["verbosity"] > 0:
            self.stdout.write(self.style.SUCCESS(message))

    def _set_log_level(self, verbosity):
        level = VERBOSITY_LEVELS.get(verbosity, logging.DEBUG)
        for name in settings.LOGGING["loggers"]:
            logging.getLogger(name).setLevel(level)
