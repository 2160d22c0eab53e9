from django.core.management.base import BaseCommand, CommandError

from runner.plotting import emit_plot


class Command(BaseCommand):
    help = "Draws CSV columns as a deterministic SVG line plot (x column first)."

    def add_arguments(self, parser):
        parser.add_argument("csv_path")
        parser.add_argument(
            "--columns", required=True,
            help="Comma-separated column names, x first, e.g. t,delta_n.",
        )
        parser.add_argument("--out", required=True, help="Target .svg file.")

    def handle(self, *args, **options):
        columns = [name.strip() for name in options["columns"].split(",") if name.strip()]
        try:
            path = emit_plot(options["csv_path"], columns, options["out"])
        except (ValueError, OSError) as error:
            raise CommandError(str(error), returncode=2)
        if options["verbosity"] > 0:
            self.stdout.write(self.style.SUCCESS(f"plot: {path}"))
