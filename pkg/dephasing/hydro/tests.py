import math

import numpy as np
from django.test import SimpleTestCase
from scipy import constants

from core.exceptions import CollapseError, PhysicalDomainError
from core.grid import RadialField, RadialGrid, field_norm, integrate_radial
from core.params import make_params
from core.spectral import dominant_frequency, frequency_resolution

from .thomas_fermi import (
    HydroPhases,
    TFState,
    evolve_r0,
    healing_length,
    phase_coefficients,
    single_condensate_diffusion_time,
    stationary_radius,
    stationary_trajectory,
    tf_density,
)
from .zero_order import (
    compute_u_tilde_general,
    phase_gauge_f,
    phi_equation_residual,
    stationary_zero_order,
    tf_cross_correlation_initial,
    tf_family,
    zero_order_solution,
)

RB87_MASS = 86.909180527 * constants.atomic_mass


def tf_params(n_total=1e4, scattering_length=0.02, lambda_coupling=5.0):
    return make_params({
        "n_total": n_total, "omega_a": 1.0, "omega_b": 1.0,
        "scattering_length": scattering_length, "lambda_coupling": lambda_coupling,
    })


class DensityTests(SimpleTestCase):

    def test_peak_and_edge(self):
        n_total, r0 = 1e4, 3.0
        self.assertAlmostEqual(tf_density(0.0, r0, n_total),
                               15 * n_total / (8 * math.pi * r0 ** 3), places=12)
        self.assertEqual(tf_density(r0, r0, n_total), 0.0)
        self.assertEqual(tf_density(4.0, r0, n_total), 0.0)

    def test_profile_carries_all_atoms(self):
        n_total, r0 = 2.5e4, 4.2
        grid = RadialGrid.uniform(r0, 2001)
        rho = RadialField(grid, tf_density(grid.nodes, r0, n_total))
        self.assertLess(abs(integrate_radial(rho) - n_total), 1e-10 * n_total)


class StationaryRadiusTests(SimpleTestCase):

    def test_normalized_units_give_unit_radius(self):
        # 15 N u0 / (4 pi) = 15 a = 1
        params = tf_params(n_total=1.0, scattering_length=1 / 15)
        self.assertAlmostEqual(stationary_radius(params), 1.0, places=12)

    def test_doubling_atoms_scales_by_fifth_root_of_two(self):
        ratio = stationary_radius(tf_params(2e4)) / stationary_radius(tf_params(1e4))
        self.assertAlmostEqual(ratio, 2 ** 0.2, places=12)

    def test_radius_balances_trap_and_pressure(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            params = tf_params(rng.uniform(1e3, 1e6), rng.uniform(1e-3, 0.1))
            r0 = stationary_radius(params)
            pressure = 15 * params.n_total * params.u0 / (4 * math.pi)
            self.assertLessEqual(abs(r0 - pressure / r0 ** 4), 1e-10 * r0)

    def test_root_is_unique(self):
        params = tf_params()
        r0 = stationary_radius(params)
        pressure = 15 * params.n_total * params.u0 / (4 * math.pi)
        radii = np.linspace(0.1 * r0, 10 * r0, 1000)
        force = -radii + pressure / radii ** 4
        self.assertEqual(np.count_nonzero(np.diff(np.sign(force))), 1)

    def test_ideal_gas_is_rejected(self):
        with self.assertRaises(PhysicalDomainError):
            stationary_radius(tf_params(scattering_length=0.0))


class RadiusEvolutionTests(SimpleTestCase):

    def setUp(self):
        self.params = tf_params()
        self.r0 = stationary_radius(self.params)

    def test_stationary_radius_stays_put(self):
        trajectory = evolve_r0(TFState(self.r0), self.params, np.linspace(0, 10, 21))
        np.testing.assert_allclose(trajectory.r0, self.r0, rtol=1e-10)

    def test_small_breathing_runs_at_root_five(self):
        period = 2 * math.pi / math.sqrt(5)
        samples = 512
        times = np.arange(samples) * (10 * period / samples)
        trajectory = evolve_r0(TFState(1.01 * self.r0), self.params, times)
        omega = dominant_frequency(times, trajectory.r0)
        self.assertLessEqual(abs(omega - math.sqrt(5)), frequency_resolution(times))

    def test_released_cloud_expands_monotonically(self):
        trajectory = evolve_r0(TFState(self.r0), self.params, np.linspace(0, 5, 51),
                               omega_t=lambda t: 0.0)
        self.assertTrue(np.all(np.diff(trajectory.r0) > 0))
        self.assertTrue(np.all(trajectory.r0_dot[1:] > 0))

    def test_falling_below_floor_is_a_collapse(self):
        with self.assertRaises(CollapseError) as ctx:
            evolve_r0(TFState(self.r0, -1.0), self.params, np.linspace(0, 1, 11),
                      floor_fraction=0.999)
        self.assertIn("floor", ctx.exception.diagnostics)


class PhaseCoefficientTests(SimpleTestCase):

    def setUp(self):
        self.params = tf_params()
        self.r0 = stationary_radius(self.params)

    def test_stationary_phases_grow_linearly(self):
        times = np.linspace(0, 4, 41)
        phases = phase_coefficients(stationary_trajectory(self.params, times), self.params,
                                    b_plus0=0.7)
        rate = 15 * self.params.n_total * self.params.u0 / (8 * math.pi * self.r0 ** 3)
        np.testing.assert_array_equal(phases.a_coeff, 0.0)
        np.testing.assert_allclose(phases.b_plus, 0.7 + rate * times, rtol=1e-12)
        np.testing.assert_allclose(phases.b_minus, rate * times, rtol=1e-12, atol=1e-14)

    def test_phase_offset_is_constant_while_breathing(self):
        times = np.linspace(0, 6, 301)
        trajectory = evolve_r0(TFState(1.1 * self.r0, 0.2), self.params, times)
        phases = phase_coefficients(trajectory, self.params, b_plus0=0.3, b_minus0=-0.2)
        np.testing.assert_allclose(phases.delta_theta0(), 0.5, atol=1e-12)

    def test_quadratic_coefficient_follows_radius_velocity(self):
        times = np.linspace(0, 2, 21)
        trajectory = evolve_r0(TFState(1.05 * self.r0), self.params, times)
        phases = phase_coefficients(trajectory, self.params)
        np.testing.assert_allclose(phases.a_coeff, -trajectory.r0_dot / (2 * trajectory.r0))
        self.assertEqual(phases.at(3).a_coeff, float(phases.a_coeff[3]))


class HealingLengthTests(SimpleTestCase):

    def test_direct_formula(self):
        self.assertAlmostEqual(healing_length(tf_params(), 2.0), 4 ** (-1 / 3), places=14)

    def test_ratio_to_radius_scaling(self):
        params = tf_params()
        ratio = (healing_length(params, 6.0) / 6.0) / (healing_length(params, 3.0) / 3.0)
        self.assertAlmostEqual(ratio, 2 ** (-4 / 3), places=12)

    def test_laboratory_condensate_is_thomas_fermi(self):
        params = make_params({
            "units": "si", "n_total": 5e5, "mass": RB87_MASS,
            "omega_a": 2 * math.pi * 59, "omega_b": 2 * math.pi * 59,
            "scattering_length": 5.3e-9,
        })
        r0 = stationary_radius(params)
        self.assertLess(healing_length(params, r0), 0.1 * r0)
        seconds = single_condensate_diffusion_time(params) * params.units.time
        self.assertTrue(0.05 < seconds < 5.0, seconds)


class ZeroOrderTests(SimpleTestCase):

    def setUp(self):
        self.params = tf_params()
        self.r0 = stationary_radius(self.params)

    def build(self, fraction=0.7, phases=None):
        n_plus = fraction * self.params.n_total
        return zero_order_solution(TFState(self.r0), phases, n_plus,
                                   self.params.n_total - n_plus, self.params)

    def test_gammas_are_one_half(self):
        for zo in (self.build(0.5), self.build(0.7, HydroPhases(0.02, 0.4, -0.3))):
            self.assertAlmostEqual(zo.gamma_plus, 0.5, places=12)
            self.assertAlmostEqual(zo.gamma_minus, 0.5, places=12)
            self.assertAlmostEqual(zo.gamma_plus + zo.gamma_minus, 1.0, places=12)

    def test_modes_carry_their_atoms(self):
        zo = self.build(0.7)
        n_total = self.params.n_total
        self.assertLess(abs(field_norm(zo.psi_plus, n_total) - zo.n_plus), 1e-8 * n_total)
        self.assertLess(abs(field_norm(zo.psi_minus, n_total) - zo.n_minus), 1e-8 * n_total)

    def test_conjugate_normalization(self):
        zo = self.build(0.6, HydroPhases(0.0, 1.1, 0.2))
        total = zo.j_integral("plus") + np.conj(zo.j_integral("minus"))
        self.assertAlmostEqual(abs(total - 1.0), 0.0, places=10)

    def test_u_tilde_from_alpha(self):
        zo = self.build()
        expected = 3 * self.params.u0 / (2 * math.pi * self.r0 ** 3)
        self.assertAlmostEqual(zo.u_tilde0 / expected, 1.0, places=12)
        self.assertAlmostEqual(zo.u_tilde0 / (2 * self.r0 ** 2 / (5 * self.params.n_total)),
                               1.0, places=10)

    def test_i_integral_is_half_alpha(self):
        zo = self.build(0.3)
        self.assertAlmostEqual(zo.i_integral / (zo.alpha / 2), 1.0, places=12)

    def test_phi_is_cut_but_products_stay_bounded(self):
        zo = self.build(0.7)
        self.assertEqual(zo.phi_plus.values[-1], 0.0)
        edge = zo.product("phi_plus", "psi_minus").values[-1]
        expected = zo.alpha * math.sqrt(zo.n_minus / zo.n_plus)
        self.assertAlmostEqual(abs(edge) / expected, 1.0, places=12)

    def test_phi_equation_residual_vanishes_inside(self):
        zo = self.build(0.7, HydroPhases(0.0, 0.9, 0.1))
        self.assertLessEqual(phi_equation_residual(zo, self.params), 1e-6)

    def test_empty_mode_is_rejected(self):
        with self.assertRaises(PhysicalDomainError):
            zero_order_solution(TFState(self.r0), None, self.params.n_total, 0.0, self.params)

    def test_populations_must_add_up(self):
        with self.assertRaises(PhysicalDomainError):
            zero_order_solution(TFState(self.r0), None, 10.0, 10.0, self.params)

    def test_cut_longer_than_radius_is_rejected(self):
        with self.assertRaises(PhysicalDomainError):
            zero_order_solution(TFState(self.r0), None, 5e3, 5e3, self.params, xi=self.r0)

    def test_stationary_helper_sets_phase_offset(self):
        zo = stationary_zero_order(self.params, delta_b=0.25)
        self.assertAlmostEqual(float(zo.phases.delta_theta0()), 0.25)


class UTildeGeneralTests(SimpleTestCase):

    def estimate(self, params):
        n_step = max(1.0, 1e-3 * params.n_total)
        r_max = 1.05 * stationary_radius(params.replace(n_total=params.n_total + n_step))
        grid = RadialGrid.uniform(r_max, 4001)
        return compute_u_tilde_general(tf_family(params), params, [0.0, 1.0, 2.0], grid)

    def test_thomas_fermi_family_matches_zero_order(self):
        params = tf_params()
        zo = stationary_zero_order(params)
        self.assertAlmostEqual(self.estimate(params).mean / zo.u_tilde0, 1.0, delta=0.01)

    def test_ideal_gas_gives_zero(self):
        params = tf_params(scattering_length=0.0)
        grid = RadialGrid.uniform(6.0, 201)
        gaussian = math.pi ** -0.75 * np.exp(-grid.nodes ** 2 / 2) / math.sqrt(2)

        def family(n_total, t, grid):
            mode = RadialField(grid, gaussian * np.exp(-1.5j * t))
            return mode, mode

        estimate = compute_u_tilde_general(family, params, [0.0, 0.5, 1.0], grid)
        np.testing.assert_array_equal(estimate.u_tilde, 0.0)

    def test_scales_like_chemical_potential_slope(self):
        small, large = tf_params(1e4), tf_params(3.2e5)
        ratio = self.estimate(large).mean / self.estimate(small).mean
        self.assertAlmostEqual(ratio / 32 ** -0.6, 1.0, delta=0.01)

    def test_gauge_function_bookkeeping(self):
        params = tf_params()
        grid = RadialGrid.uniform(1.05 * stationary_radius(params.replace(n_total=1.001e4)), 801)
        value = phase_gauge_f(tf_family(params), params, 0.0, grid)
        self.assertAlmostEqual(value.imag, -1 / (2 * params.n_total), places=15)
        self.assertAlmostEqual(value.real, 0.0, places=12)

    def test_needs_two_times(self):
        params = tf_params()
        with self.assertRaises(ValueError):
            compute_u_tilde_general(tf_family(params), params, [0.0],
                                    RadialGrid.uniform(8.0, 101))


class SelfSimilarInitialTests(SimpleTestCase):

    def test_norms_and_relative_phase(self):
        params = tf_params()
        r0 = stationary_radius(params)
        grid = RadialGrid.uniform(r0, 1001)
        psi_a, psi_b = tf_cross_correlation_initial(grid, params, r0, 6e3, 4e3, delta_phi=0.4)
        self.assertAlmostEqual(field_norm(psi_a, params.n_total) / 6e3, 1.0, places=5)
        self.assertAlmostEqual(field_norm(psi_b, params.n_total) / 4e3, 1.0, places=5)
        self.assertAlmostEqual(np.angle(integrate_radial(psi_a.conj() * psi_b)), 0.4, places=12)
