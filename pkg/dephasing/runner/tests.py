import json
import math
import tempfile
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from rest_framework import serializers

from .config import flatten_config, load_config, parse_config_text, with_overrides
from .output import Table, column_name, read_csv, write_csv
from .plotting import PlotError, emit_plot
from .sweep import sweep_points

JOSEPHSON = [
    "params.n_total=1000", "params.omega_a=1.0", "params.omega_b=1.0",
    "params.lambda_coupling=1.3",
]
TF = [
    "params.n_total=1e5", "params.omega_a=1.0", "params.omega_b=1.0",
    "params.scattering_length=0.01", "params.lambda_coupling=5.0",
]


def run(subcommand, out, *overrides, **options):
    call_command("run", subcommand, overrides=list(overrides), out=str(out), verbosity=0,
                 **options)
    return json.loads((Path(out) / "manifest.json").read_text())


class TempDirTestCase(SimpleTestCase):

    def setUp(self):
        self._tmp = tempfile.TemporaryDirectory()
        self.tmp = Path(self._tmp.name)

    def tearDown(self):
        self._tmp.cleanup()


class ConfigTests(TempDirTestCase):

    def test_defaults_fill_every_block(self):
        config = load_config(overrides=JOSEPHSON)
        self.assertEqual(config["grid"]["n_points"], 257)
        self.assertEqual(config["scenario"]["variant"], "total")
        self.assertEqual(config["oracle"]["n_atoms"], 200)
        self.assertIsNone(config["solver"]["steps"])

    def test_sections_act_as_prefixes(self):
        nested = parse_config_text(
            "params.n_total = 10\n[solver]\ndt = 0.01  # step\n"
        )
        self.assertEqual(nested, {"params": {"n_total": "10"}, "solver": {"dt": "0.01"}})

    def test_overrides_win_over_the_file(self):
        path = self.tmp / "run.ini"
        path.write_text("\n".join(JOSEPHSON) + "\nsolver.dt = 0.01\n")
        config = load_config(path, ["solver.dt=0.002"])
        self.assertEqual(config["solver"]["dt"], 0.002)
        self.assertEqual(config["params"]["lambda_coupling"], 1.3)

    def test_unknown_key_is_named(self):
        with self.assertRaises(serializers.ValidationError) as context:
            load_config(overrides=JOSEPHSON + ["params.bogus=1"])
        self.assertIn("bogus", str(context.exception.detail))

    def test_key_without_block_is_rejected(self):
        with self.assertRaises(serializers.ValidationError):
            parse_config_text("n_total = 10\n")

    def test_even_grid_is_rejected(self):
        with self.assertRaises(serializers.ValidationError):
            load_config(overrides=JOSEPHSON + ["grid.n_points=256"])

    def test_flattened_config_validates_to_itself(self):
        config = load_config(overrides=JOSEPHSON + ["params.scattering_length=0.013",
                                                    "output.emit_svg=true"])
        self.assertEqual(with_overrides(config, []), config)
        self.assertEqual(flatten_config(config)["params.scattering_length"], "0.013")

    def test_sweep_values_need_a_key(self):
        with self.assertRaises(serializers.ValidationError):
            load_config(overrides=JOSEPHSON + ["sweep.first_values=1,2"])

    def test_sweep_cannot_target_output(self):
        with self.assertRaises(serializers.ValidationError):
            load_config(overrides=JOSEPHSON + ["sweep.first=output.directory",
                                               "sweep.first_values=a,b"])

    def test_sweep_points_apply_overrides(self):
        config = load_config(overrides=JOSEPHSON + [
            "sweep.first=params.lambda_coupling", "sweep.first_values=1, 2",
            "sweep.second=scenario.delta_n0", "sweep.second_values=0,10,20",
        ])
        points = sweep_points(config)
        self.assertEqual(len(points), 6)
        self.assertEqual([point["params"]["lambda_coupling"] for _, point in points],
                         [1.0] * 3 + [2.0] * 3)
        self.assertEqual(points[-1][1]["scenario"]["delta_n0"], 20.0)

    def test_invalid_sweep_value_is_rejected(self):
        config = load_config(overrides=JOSEPHSON + [
            "sweep.first=params.lambda_coupling", "sweep.first_values=1,-1",
        ])
        with self.assertRaises(serializers.ValidationError):
            sweep_points(config)


class OutputTests(TempDirTestCase):

    def test_csv_format(self):
        path = write_csv(self.tmp / "a.csv", ["t[1/omega_m]", "x[atoms]"], [[0.0, 1.5]])
        self.assertEqual(path.read_text(),
                         "t[1/omega_m],x[atoms]\n0.000000000000e+00,1.500000000000e+00\n")

    def test_read_back(self):
        path = write_csv(self.tmp / "a.csv", ["t[1]", "x[1]"], np.arange(6.0).reshape(3, 2))
        columns, data = read_csv(path)
        self.assertEqual(columns, ["t[1]", "x[1]"])
        np.testing.assert_array_equal(data, np.arange(6.0).reshape(3, 2))

    def test_empty_table_reads_as_zero_rows(self):
        path = write_csv(self.tmp / "a.csv", ["t[1]", "x[1]"], np.empty((0, 2)))
        self.assertEqual(read_csv(path)[1].shape, (0, 2))

    def test_headers_need_units(self):
        with self.assertRaises(ValueError):
            Table("bad", ["t"], [[0.0]])

    def test_shape_must_match_headers(self):
        with self.assertRaises(ValueError):
            Table("bad", ["t[1]", "x[1]"], [[0.0, 1.0, 2.0]])

    def test_column_name(self):
        self.assertEqual(column_name("delta_n[atoms]"), "delta_n")
        self.assertEqual(column_name("delta_n"), "delta_n")


class EmitPlotTests(TempDirTestCase):

    def setUp(self):
        super().setUp()
        times = np.linspace(0, 1, 21)
        self.csv = write_csv(self.tmp / "trace.csv", ["t[1/omega_m]", "delta_n[atoms]"],
                             np.column_stack([times, np.cos(4 * times)]))

    def test_writes_svg(self):
        out = emit_plot(self.csv, ["t", "delta_n"], self.tmp / "trace.svg")
        text = out.read_text()
        self.assertIn("<svg", text)
        self.assertIn("delta_n[atoms]", text)

    def test_identical_input_gives_identical_bytes(self):
        first = emit_plot(self.csv, ["t", "delta_n"], self.tmp / "one.svg").read_bytes()
        second = emit_plot(self.csv, ["t[1/omega_m]", "delta_n[atoms]"],
                           self.tmp / "two.svg").read_bytes()
        self.assertEqual(first, second)

    def test_missing_column_lists_available_ones(self):
        with self.assertRaises(PlotError) as context:
            emit_plot(self.csv, ["t", "visibility"], self.tmp / "x.svg")
        self.assertIn("delta_n", str(context.exception))
        self.assertFalse((self.tmp / "x.svg").exists())

    def test_empty_rows_write_no_file(self):
        empty = write_csv(self.tmp / "empty.csv", ["t[1]", "x[1]"], np.empty((0, 2)))
        with self.assertRaises(PlotError):
            emit_plot(empty, ["t", "x"], self.tmp / "empty.svg")
        self.assertFalse((self.tmp / "empty.svg").exists())

    def test_command_maps_errors_to_config_status(self):
        with self.assertRaises(CommandError) as context:
            call_command("emit_plot", str(self.csv), columns="t,bogus",
                         out=str(self.tmp / "x.svg"), verbosity=0)
        self.assertEqual(context.exception.returncode, 2)
        self.assertIn("delta_n", str(context.exception))

    def test_command_writes_plot(self):
        call_command("emit_plot", str(self.csv), columns="t,delta_n",
                     out=str(self.tmp / "cmd.svg"), verbosity=0)
        self.assertTrue((self.tmp / "cmd.svg").exists())


class RunCommandTests(TempDirTestCase):

    def test_two_mode_matches_closed_form(self):
        manifest = run("two-mode", self.tmp, *JOSEPHSON, "scenario.delta_n0=200",
                       "solver.steps_per_period=2000")
        columns, data = read_csv(self.tmp / "two_mode.csv")
        numeric = data[:, columns.index("delta_n[atoms]")]
        closed = data[:, columns.index("delta_n_closed[atoms]")]
        self.assertLess(np.max(np.abs(numeric - closed)), 1e-6 * 1000)
        self.assertLess(manifest["summary"]["c_drift"], 1e-8 * abs(manifest["summary"]["c_value"]))
        self.assertEqual(manifest["status"], "ok")
        self.assertEqual(manifest["artifacts"], ["two_mode.csv"])

    def test_csv_is_byte_identical_across_runs(self):
        run("two-mode", self.tmp / "a", *JOSEPHSON, "scenario.delta_n0=300")
        run("two-mode", self.tmp / "b", *JOSEPHSON, "scenario.delta_n0=300")
        self.assertEqual((self.tmp / "a" / "two_mode.csv").read_bytes(),
                         (self.tmp / "b" / "two_mode.csv").read_bytes())

    def test_manifest_reproduces_the_run(self):
        manifest = run("two-mode", self.tmp / "a", *JOSEPHSON, "scenario.delta_n0=250.5",
                       "scenario.delta_phi0=0.3")
        self.assertEqual(manifest["config"]["scenario"]["delta_n0"], "250.5")
        call_command("run", "two-mode", config=str(self.tmp / "a" / "manifest.json"),
                     out=str(self.tmp / "b"), verbosity=0)
        self.assertEqual((self.tmp / "a" / "two_mode.csv").read_bytes(),
                         (self.tmp / "b" / "two_mode.csv").read_bytes())

    def test_dephasing_without_asymmetry(self):
        manifest = run("dephasing", self.tmp, *TF)
        self.assertEqual(manifest["summary"]["rate"], 0.0)
        self.assertEqual(manifest["summary"]["tau_d"], "inf")
        self.assertEqual(manifest["summary"]["tau_d_imbalance"], "inf")
        self.assertEqual(manifest["summary"]["q1_ratio"], "nan")
        columns, data = read_csv(self.tmp / "dephasing.csv")
        self.assertEqual(data.shape, (1, 9))
        self.assertTrue(math.isinf(data[0, columns.index("tau_d_total[1/omega_m]")]))

    def test_dephasing_variants_differ_by_imbalance(self):
        manifest = run("dephasing", self.tmp, *TF, "params.delta_omega_sq=0.01",
                       "scenario.population_fraction=0.7")
        summary = manifest["summary"]
        self.assertAlmostEqual(summary["rate_imbalance"] / summary["rate_total"], 0.4,
                               places=10)
        self.assertAlmostEqual(summary["q1_ratio"],
                               summary["q1_closed_form"] / summary["q1_numeric"], places=12)
        self.assertAlmostEqual(summary["q1_ratio"], 1.0, delta=0.1)
        self.assertLess(summary["q2_closed_form"], 0.0)

    def test_sweep_rates_follow_v_squared(self):
        manifest = run("sweep", self.tmp, *TF, "sweep.first=params.delta_omega_sq",
                       "sweep.first_values=0.005,0.01,0.02", "sweep.target=dephasing",
                       "sweep.workers=2")
        self.assertEqual(manifest["summary"]["points"], 3)
        self.assertEqual(manifest["summary"]["failed"], 0)
        columns, data = read_csv(self.tmp / "sweep.csv")
        np.testing.assert_allclose(data[:, columns.index("params.delta_omega_sq[-]")],
                                   [0.005, 0.01, 0.02])
        rates = data[:, columns.index("rate[-]")]
        np.testing.assert_allclose(rates / rates[0], [1.0, 4.0, 16.0], rtol=1e-9)
        for index in range(3):
            self.assertTrue((self.tmp / f"point_{index:03d}" / "dephasing.csv").exists())

    def test_hydro_reports_radius(self):
        manifest = run("hydro", self.tmp, *TF, "scenario.n_periods=2")
        summary = manifest["summary"]
        self.assertAlmostEqual(summary["r0_min"], summary["r0"], places=6)
        self.assertAlmostEqual(summary["r0_max"], summary["r0"], places=6)
        self.assertLess(summary["xi_over_r0"], 0.05)
        self.assertAlmostEqual(summary["mu"], 0.5 * summary["r0"] ** 2, places=9)

    def test_moments_without_asymmetry_keep_correlation(self):
        manifest = run("moments", self.tmp, *TF, "scenario.n_periods=2")
        self.assertAlmostEqual(manifest["summary"]["final_correlation_decay"], 1.0, places=10)
        tau = manifest["summary"]["tau_d_fit"]
        self.assertTrue(tau == "inf" or tau > 1e6)

    def test_gpe_conserves_atoms(self):
        run("gpe", self.tmp, "params.n_total=1000", "params.omega_a=1.0", "params.omega_b=1.0",
            "params.scattering_length=0.01", "params.lambda_coupling=1.0",
            "scenario.delta_n0=100", "grid.n_points=129", "solver.steps=40",
            "solver.record_every=8")
        columns, data = read_csv(self.tmp / "gpe.csv")
        total = data[:, columns.index("n_first[atoms]")] + data[:, columns.index("n_second[atoms]")]
        np.testing.assert_allclose(total, 1000.0, rtol=1e-8)
        self.assertTrue((self.tmp / "gpe_snapshot.csv").exists())

    def test_oracle_without_nonlinearity(self):
        manifest = run("oracle", self.tmp, *JOSEPHSON, "oracle.n_atoms=50",
                       "scenario.n_periods=2")
        self.assertEqual(manifest["summary"]["chi"], 0.0)
        self.assertEqual(manifest["summary"]["revival_time"], "inf")
        columns, _ = read_csv(self.tmp / "oracle.csv")
        self.assertEqual(columns[-1], "visibility[1]")

    def test_svg_flag_adds_plots(self):
        manifest = run("two-mode", self.tmp, *JOSEPHSON, "scenario.delta_n0=100", svg=True)
        self.assertEqual(manifest["artifacts"], ["two_mode.csv", "two_mode.svg"])

    def test_unknown_key_exits_with_config_status(self):
        with self.assertRaises(CommandError) as context:
            run("two-mode", self.tmp, *JOSEPHSON, "params.bogus=1")
        self.assertEqual(context.exception.returncode, 2)

    def test_domain_error_exits_with_config_status(self):
        with self.assertRaises(CommandError) as context:
            run("dephasing", self.tmp, *TF[:-1])
        self.assertEqual(context.exception.returncode, 2)
