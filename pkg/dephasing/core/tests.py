import math

import numpy as np
from django.test import SimpleTestCase
from rest_framework import serializers
from scipy import constants

from .exceptions import GridMismatchError, InvalidFieldError
from .grid import RadialField, RadialGrid, cumulative_radial, field_norm, integrate_radial
from .integrators import integrate_ode, josephson_step
from .params import make_params
from .spectral import dominant_frequency

RB87_MASS = 86.909180527 * constants.atomic_mass


class MakeParamsTests(SimpleTestCase):

    def test_symmetric_traps_have_no_asymmetry(self):
        params = make_params({"n_total": 1000, "omega_a": 2.0, "omega_b": 2.0})
        self.assertEqual(params.delta_omega_sq, 0.0)
        self.assertTrue(np.all(params.delta_v(np.linspace(0, 3, 7)) == 0.0))

    def test_internal_units_put_mean_frequency_to_one(self):
        params = make_params({"n_total": 10, "omega_a": 3.0, "omega_b": 1.0})
        self.assertAlmostEqual(params.omega_mean_sq, 1.0, places=14)
        self.assertEqual(params.hbar, 1.0)
        self.assertEqual(params.mass, 1.0)

    def test_ideal_gas_has_zero_coupling(self):
        params = make_params({"n_total": 10, "omega_a": 1.0, "omega_b": 1.0,
                              "scattering_length": 0.0})
        self.assertEqual(params.u0, 0.0)

    def test_rubidium_coupling_matches_hand_evaluation(self):
        a_sc = 5e-9
        params = make_params({
            "units": "si", "n_total": 5e5, "mass": RB87_MASS,
            "omega_a": 2 * math.pi * 59, "omega_b": 2 * math.pi * 59,
            "scattering_length": a_sc, "lambda_coupling": 2 * math.pi * 10,
        })
        expected = 4 * math.pi * constants.hbar ** 2 * a_sc / RB87_MASS
        self.assertAlmostEqual(params.u0_physical / expected, 1.0, places=12)

    def test_unit_round_trip(self):
        raw = {
            "units": "si", "n_total": 2e4, "mass": RB87_MASS,
            "omega_a": 2 * math.pi * 61.0, "omega_b": 2 * math.pi * 57.0,
            "scattering_length": 5.3e-9, "lambda_coupling": 2 * math.pi * 3.5,
        }
        back = make_params(raw).to_physical()
        for key in ("n_total", "mass", "omega_a", "omega_b",
                    "scattering_length", "lambda_coupling"):
            self.assertAlmostEqual(back[key] / raw[key], 1.0, places=12, msg=key)

    def test_delta_omega_sq_resplits_around_mean(self):
        params = make_params({"n_total": 10, "omega_a": 1.0, "omega_b": 1.0,
                              "delta_omega_sq": 0.1})
        self.assertAlmostEqual(params.delta_omega_sq, 0.1, places=14)
        self.assertAlmostEqual(params.omega_mean_sq, 1.0, places=14)

    def test_nonpositive_inputs_name_the_field(self):
        cases = {
            "mass": {"n_total": 10, "mass": 0.0, "omega_a": 1, "omega_b": 1},
            "omega_a": {"n_total": 10, "omega_a": -1.0, "omega_b": 1},
            "n_total": {"n_total": 0, "omega_a": 1, "omega_b": 1},
        }
        for name, raw in cases.items():
            with self.assertRaises(serializers.ValidationError) as ctx:
                make_params(raw)
            self.assertIn(name, ctx.exception.detail)

    def test_unknown_key_is_rejected(self):
        with self.assertRaises(serializers.ValidationError) as ctx:
            make_params({"n_total": 10, "omega_a": 1, "omega_b": 1, "omgea_a": 2})
        self.assertIn("omgea_a", ctx.exception.detail)


class RadialGridTests(SimpleTestCase):

    def test_constant_integrates_to_ball_volume(self):
        grid = RadialGrid.uniform(2.5, 101)
        ones = RadialField(grid, np.ones(grid.n_points))
        expected = 4 * math.pi * 2.5 ** 3 / 3
        self.assertAlmostEqual(integrate_radial(ones) / expected, 1.0, places=12)

    def test_weights_nonnegative_and_zero_at_origin(self):
        for grid in (RadialGrid.uniform(1.0, 51), RadialGrid.graded(1.0, 51),
                     RadialGrid.trapezoid(1.0, 51)):
            self.assertTrue(np.all(grid.weights >= 0))
            self.assertEqual(grid.weights[0], 0.0)
            self.assertTrue(np.all(np.diff(grid.nodes) > 0))

    def test_cubic_polynomial_is_exact(self):
        grid = RadialGrid.uniform(1.5, 11)
        field = RadialField.from_function(grid, lambda r: r)
        self.assertAlmostEqual(integrate_radial(field), math.pi * 1.5 ** 4, places=12)

    def test_thomas_fermi_profile_integrates_to_atom_number(self):
        n_atoms, r0 = 1e5, 3.0
        grid = RadialGrid.uniform(r0, 2001)
        rho = RadialField.from_function(
            grid, lambda r: 15 * n_atoms / (8 * math.pi * r0 ** 3) * (1 - r ** 2 / r0 ** 2)
        )
        self.assertLess(abs(integrate_radial(rho) - n_atoms), 1e-10 * n_atoms)

    def test_zero_integrates_to_zero(self):
        grid = RadialGrid.uniform(1.0, 11)
        self.assertEqual(integrate_radial(RadialField.zeros(grid)), 0.0)

    def test_graded_grid_reproduces_ball_volume(self):
        grid = RadialGrid.graded(2.0, 401)
        ones = RadialField(grid, np.ones(grid.n_points))
        self.assertAlmostEqual(integrate_radial(ones) / (4 * math.pi * 8 / 3), 1.0, places=10)

    def test_cumulative_integral_ends_at_total(self):
        grid = RadialGrid.graded(1.0, 201)
        field = RadialField.from_function(grid, lambda r: np.exp(-r ** 2))
        running = cumulative_radial(field)
        self.assertAlmostEqual(running[-1].real, integrate_radial(field), places=8)

    def test_even_point_count_is_rejected(self):
        with self.assertRaises(ValueError):
            RadialGrid.uniform(1.0, 10)


class RadialFieldTests(SimpleTestCase):

    def test_grid_mismatch_raises(self):
        first = RadialField.zeros(RadialGrid.uniform(1.0, 11))
        second = RadialField.zeros(RadialGrid.uniform(2.0, 11))
        with self.assertRaises(GridMismatchError):
            first * second

    def test_non_finite_samples_are_rejected(self):
        grid = RadialGrid.uniform(1.0, 5)
        with self.assertRaises(InvalidFieldError):
            RadialField(grid, [0, 1, np.nan, 0, 0])
        with self.assertRaises(InvalidFieldError):
            RadialField(grid, [0, 1, 0])

    def test_norm_of_zero_field(self):
        grid = RadialGrid.uniform(1.0, 11)
        self.assertEqual(field_norm(RadialField.zeros(grid), 100), 0.0)

    def test_norm_counts_atoms(self):
        grid = RadialGrid.uniform(1.0, 101)
        volume = 4 * math.pi / 3
        psi = RadialField(grid, np.full(grid.n_points, math.sqrt(0.25 / volume)) * 1j)
        self.assertAlmostEqual(field_norm(psi, 400), 100.0, places=10)


class IntegratorTests(SimpleTestCase):

    def test_exponential_decay(self):
        times = np.linspace(0, 2, 5)
        ys = integrate_ode(lambda t, y: -y, np.array([1.0]), times, 1e-3)
        np.testing.assert_allclose(ys[:, 0], np.exp(-times), rtol=1e-11)

    def test_step_gives_requested_resolution(self):
        self.assertAlmostEqual(josephson_step(2.0, 200), math.pi / 2 / 200)

    def test_decreasing_times_are_rejected(self):
        with self.assertRaises(ValueError):
            integrate_ode(lambda t, y: y, np.array([1.0]), [0.0, 1.0, 0.5], 0.1)


class SpectralTests(SimpleTestCase):

    def test_peak_of_pure_tone(self):
        omega = 3.0
        period = 2 * math.pi / omega
        times = np.arange(400) * (20 * period / 400)
        self.assertAlmostEqual(dominant_frequency(times, np.cos(omega * times)), omega, places=10)
