import math
from dataclasses import replace
from unittest import mock

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import ConvergenceError, InstabilityError
from core.grid import RadialField, RadialGrid, integrate_radial
from core.params import make_params
from core.spectral import dominant_frequency, frequency_resolution
from hydro.thomas_fermi import stationary_radius, tf_density
from hydro.zero_order import tf_cross_correlation_initial
from josephson.dynamics import closed_form_delta_n, closed_form_phase

from .fields import (
    AB,
    PLUS_MINUS,
    CoupledField,
    snapshot_rows,
    transform_basis,
    two_mode_reduction,
)
from .kinetic import FACTOR_CACHE_SIZE, CrankNicolsonKinetic
from .solver import (
    SolverConfig,
    chemical_potential,
    evolve,
    ground_state,
    normalized,
    observables,
    step_ab,
    step_pm,
    total_norm,
)


def gas(n_total=1000, scattering_length=0.01, lambda_coupling=1.0):
    return make_params({
        "n_total": n_total, "omega_a": 1.0, "omega_b": 1.0,
        "scattering_length": scattering_length, "lambda_coupling": lambda_coupling,
    })


def distance(left, right):
    """L2 distance between two states on one grid."""
    return math.sqrt(integrate_radial((left.first - right.first).abs2())
                     + integrate_radial((left.second - right.second).abs2()))


def gaussian_pair(grid, width_b=1.3, chirp=0.4):
    r = grid.nodes
    a = np.exp(-r ** 2 / 2)
    b = np.exp(-r ** 2 / (2 * width_b ** 2) + 1j * chirp * r ** 2)
    state = CoupledField(RadialField(grid, a), RadialField(grid, b), AB)
    return normalized(state)


class TransformBasisTests(SimpleTestCase):

    def setUp(self):
        self.grid = RadialGrid.trapezoid(8.0, 65)
        self.params = gas(lambda_coupling=1.5)

    def test_equal_components_fill_plus_mode(self):
        shape = RadialField(self.grid, np.exp(-self.grid.nodes ** 2 / 2))
        state = CoupledField(shape, shape, AB)
        pm = transform_basis(state, self.params)
        self.assertEqual(pm.basis, PLUS_MINUS)
        self.assertLess(np.max(np.abs(pm.second.values)), 1e-15)
        np.testing.assert_allclose(pm.first.values, math.sqrt(2) * shape.values, atol=1e-15)

    def test_round_trip_and_norms(self):
        state = replace(gaussian_pair(self.grid), time=0.7)
        pm = transform_basis(state, self.params)
        back = transform_basis(pm, self.params)
        self.assertEqual(back.basis, AB)
        np.testing.assert_allclose(back.first.values, state.first.values, atol=1e-14)
        np.testing.assert_allclose(back.second.values, state.second.values, atol=1e-14)
        self.assertAlmostEqual(total_norm(pm), total_norm(state), places=13)

    def test_snapshot_rows(self):
        rows = snapshot_rows(gaussian_pair(self.grid))
        self.assertEqual(rows.shape, (65, 5))
        np.testing.assert_array_equal(rows[:, 0], self.grid.nodes)


class GroundStateTests(SimpleTestCase):

    def test_ideal_gas_oscillator_mode(self):
        params = gas(scattering_length=0.0, lambda_coupling=0.0)
        state = ground_state(params, config=SolverConfig(dt=1e-3, n_points=129),
                             population_fraction=1.0)
        self.assertAlmostEqual(observables(state, params).energy, 1.5, delta=1e-4)
        self.assertAlmostEqual(chemical_potential(state, params), 1.5, delta=1e-4)
        expected = math.pi ** -0.75 * np.exp(-state.grid.nodes ** 2 / 2)
        np.testing.assert_allclose(np.abs(state.first.values), expected, atol=1e-3)
        self.assertEqual(np.max(np.abs(state.second.values)), 0.0)

    def test_thomas_fermi_profile(self):
        params = gas(n_total=1e5, scattering_length=0.1, lambda_coupling=0.0)
        state = ground_state(params, config=SolverConfig(dt=1e-3), population_fraction=1.0)
        r0 = stationary_radius(params)
        grid = state.grid
        inner = grid.nodes < 0.8 * r0
        rho = params.n_total * np.abs(state.first.values) ** 2
        rho_tf = tf_density(grid.nodes, r0, params.n_total)
        weights = grid.weights * inner
        error = math.sqrt(np.dot(weights, (rho - rho_tf) ** 2) / np.dot(weights, rho_tf ** 2))
        self.assertLess(error, 0.02)

    def test_energy_decreases_along_iterates(self):
        energies = []
        ground_state(gas(), config=SolverConfig(dt=1e-3, n_points=129),
                     callback=lambda iteration, energy: energies.append(energy))
        self.assertGreater(len(energies), 10)
        steps = np.diff(energies)
        self.assertTrue(np.all(steps <= 1e-10 * abs(energies[-1])))

    def test_split_population_without_coupling(self):
        params = gas(lambda_coupling=0.0)
        state = ground_state(params, config=SolverConfig(dt=1e-3, n_points=129),
                             population_fraction=0.7)
        record = observables(state, params)
        self.assertAlmostEqual(record.n_first / params.n_total, 0.7, places=10)
        self.assertAlmostEqual(record.n_second / params.n_total, 0.3, places=10)

    def test_iteration_limit(self):
        config = SolverConfig(dt=1e-3, n_points=65, max_iterations=3)
        with self.assertRaises(ConvergenceError) as raised:
            ground_state(gas(), config=config)
        self.assertEqual(raised.exception.diagnostics["iterations"], 3)
        self.assertIn("relative_change", raised.exception.diagnostics)


class StepTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.config = SolverConfig(dt=1e-3, n_points=129)
        cls.single = ground_state(gas(lambda_coupling=0.0), config=cls.config,
                                  population_fraction=1.0)
        cls.split = ground_state(gas(lambda_coupling=0.0), config=cls.config,
                                 population_fraction=0.7)
        cls.symmetric = ground_state(gas(n_total=100, lambda_coupling=2.0), config=cls.config)

    def test_stationary_state_rotates_at_mu(self):
        params = gas(lambda_coupling=0.0)
        mu = chemical_potential(self.single, params)
        result = evolve(self.single, params, self.config, n_steps=1000, record_every=1000)
        overlap = integrate_radial(self.single.first.conj() * result.state.first)
        self.assertAlmostEqual(abs(overlap), 1.0, delta=1e-6)
        self.assertLess(abs(np.angle(overlap * np.exp(1j * mu * result.state.time))), 1e-4)
        np.testing.assert_allclose(np.abs(result.state.first.values),
                                   np.abs(self.single.first.values), atol=1e-4)

    def test_rabi_transfer_in_shared_mode(self):
        params = gas(lambda_coupling=1.0)
        result = evolve(self.single, params, self.config, n_steps=2000, record_every=100)
        trajectory = result.trajectory
        expected = params.n_total * np.cos(params.lambda_coupling * trajectory.times) ** 2
        np.testing.assert_allclose(trajectory.n_first, expected, atol=1e-8 * params.n_total)
        np.testing.assert_allclose(trajectory.n_first + trajectory.n_second, params.n_total,
                                   rtol=1e-12)

    def test_second_order_convergence(self):
        params = gas(n_total=100, lambda_coupling=2.0).with_delta_omega_sq(0.2)
        finals = []
        for dt, n_steps in ((0.01, 20), (0.005, 40), (0.0025, 80)):
            config = SolverConfig(dt=dt, n_points=129)
            finals.append(evolve(self.symmetric, params, config, n_steps, n_steps).state)
        ratio = distance(finals[0], finals[1]) / distance(finals[1], finals[2])
        self.assertGreater(ratio, 3.3)
        self.assertLess(ratio, 4.7)

    def test_plus_minus_decouple_without_trap_difference(self):
        params = gas(lambda_coupling=2.0)
        pm = transform_basis(self.split, params)
        result = evolve(pm, params, self.config, n_steps=500, record_every=50)
        trajectory = result.trajectory
        np.testing.assert_allclose(trajectory.n_first, trajectory.n_first[0], rtol=1e-10)
        np.testing.assert_allclose(trajectory.n_second, trajectory.n_second[0], rtol=1e-10)

    def test_basis_equivariance(self):
        params = gas(lambda_coupling=2.0).with_delta_omega_sq(0.2)
        gaps = []
        for dt in (0.02, 0.01):
            config = SolverConfig(dt=dt, n_points=129)
            via_ab = transform_basis(step_ab(self.split, params, config), params)
            via_pm = step_pm(transform_basis(self.split, params), params, config)
            gaps.append(distance(via_ab, via_pm))
        self.assertGreater(gaps[0] / gaps[1], 3.5)

    def test_fast_coupling_suppresses_transfer(self):
        config = SolverConfig(dt=2e-3, n_points=129)
        transfer = []
        for lambda_coupling in (5.0, 20.0):
            params = gas(n_total=100, lambda_coupling=lambda_coupling).with_delta_omega_sq(0.05)
            pm = transform_basis(self.symmetric, params)
            trajectory = evolve(pm, params, config, n_steps=1000, record_every=10).trajectory
            transfer.append(np.max(trajectory.n_second) / params.n_total)
        self.assertGreater(transfer[0], 0.0)
        self.assertGreater(transfer[0] / transfer[1], 10.0)

    def test_wrong_basis_rejected(self):
        pm = transform_basis(self.split, gas())
        with self.assertRaises(ValueError):
            step_ab(pm, gas(), self.config)
        with self.assertRaises(ValueError):
            step_pm(self.split, gas(), self.config)


class ObservableTests(SimpleTestCase):

    def setUp(self):
        self.grid = RadialGrid.trapezoid(8.0, 129)
        self.params = gas()

    def test_cross_correlation_bounded(self):
        record = observables(gaussian_pair(self.grid), self.params)
        self.assertLessEqual(abs(record.cross_corr),
                             math.sqrt(record.n_first * record.n_second) * (1 + 1e-12))
        self.assertAlmostEqual(record.n_first + record.n_second, self.params.n_total, places=8)

    def test_empty_second_component(self):
        shape = gaussian_pair(self.grid).first
        state = normalized(CoupledField(shape, RadialField.zeros(self.grid), AB))
        self.assertEqual(observables(state, self.params).cross_corr, 0)

    def test_plus_minus_state_reports_ab_correlation(self):
        state = gaussian_pair(self.grid)
        pm = transform_basis(state, self.params)
        self.assertAlmostEqual(observables(pm, self.params).cross_corr,
                               observables(state, self.params).cross_corr, places=10)


class ConservationTests(SimpleTestCase):

    def test_norm_over_ten_thousand_steps(self):
        config = SolverConfig(dt=1e-3, n_points=65)
        state = ground_state(gas(lambda_coupling=0.0), config=config, population_fraction=0.7)
        params = gas(lambda_coupling=1.0).with_delta_omega_sq(0.1)
        trajectory = evolve(state, params, config, n_steps=10_000, record_every=10_000).trajectory
        totals = trajectory.n_first + trajectory.n_second
        self.assertLess(abs(totals[-1] - totals[0]), 1e-8 * params.n_total)

    def test_energy_during_breathing(self):
        config = SolverConfig(dt=2e-3, n_points=129)
        squeezed = ground_state(gas(scattering_length=0.02, lambda_coupling=0.0), config=config,
                                population_fraction=0.7)
        params = gas(scattering_length=0.01, lambda_coupling=1.0)
        n_steps = round(10 * 2 * math.pi / config.dt)
        energy = evolve(squeezed, params, config, n_steps, record_every=1000).trajectory.energy
        self.assertLess(np.max(np.abs(energy - energy[0])) / abs(energy[0]), 1e-5)

    def test_norm_guard(self):
        params = gas()
        config = SolverConfig(dt=1e-3, n_points=65)
        state = gaussian_pair(RadialGrid.trapezoid(8.0, 65))

        def leaky(state, params, config):
            return state.with_values(state.first.values * 1.01, state.second.values,
                                     state.time + config.dt)

        with mock.patch("gpe.solver.step_ab", side_effect=leaky):
            with self.assertRaises(InstabilityError) as raised:
                evolve(state, params, config, n_steps=5)
        self.assertEqual(raised.exception.diagnostics["step"], 5)

    def test_time_step_too_large(self):
        state = gaussian_pair(RadialGrid.trapezoid(8.0, 65))
        with self.assertRaises(ValueError):
            evolve(state, gas(), SolverConfig(dt=1.0, n_points=65), n_steps=1)


class ImplicitSchemeTests(SimpleTestCase):

    def test_rabi_and_norm(self):
        config = SolverConfig(dt=1e-3, scheme="implicit", n_points=129)
        state = ground_state(gas(lambda_coupling=0.0), config=config, population_fraction=1.0)
        params = gas(lambda_coupling=1.0)
        trajectory = evolve(state, params, config, n_steps=2000, record_every=200).trajectory
        expected = params.n_total * np.cos(trajectory.times) ** 2
        np.testing.assert_allclose(trajectory.n_first, expected, atol=1e-8 * params.n_total)
        totals = trajectory.n_first + trajectory.n_second
        np.testing.assert_allclose(totals, params.n_total, rtol=1e-10)

    def test_unknown_scheme(self):
        with self.assertRaises(ValueError):
            SolverConfig(dt=1e-3, scheme="leapfrog")

    def test_factor_cache_stays_bounded(self):
        grid = RadialGrid.uniform(5.0, 65)
        kinetic = CrankNicolsonKinetic(grid)
        psi = np.exp(-grid.nodes ** 2).astype(complex)
        for k in range(1, 4 * FACTOR_CACHE_SIZE):
            kinetic.propagate(psi, 1e-3 * k, imaginary=k % 2 == 0)
        self.assertEqual(kinetic._factor.cache_info().currsize, FACTOR_CACHE_SIZE)
        first = kinetic.propagate(psi, 1e-3)
        np.testing.assert_allclose(kinetic.propagate(psi, 1e-3), first, rtol=0.0, atol=0.0)
        u = kinetic._to_u(first)
        np.testing.assert_allclose(np.vdot(u, u).real, np.vdot(kinetic._to_u(psi),
                                   kinetic._to_u(psi)).real, rtol=1e-12)


class SelfSimilarTests(SimpleTestCase):
    """Thomas-Fermi A/B start in a symmetric trap against the two-mode closed forms."""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.params = gas(n_total=1e4, scattering_length=0.02, lambda_coupling=5.0)
        config = SolverConfig(dt=2 * math.pi / 2048)
        grid = RadialGrid.trapezoid(2 * stationary_radius(cls.params), config.n_points)
        n_a = 0.7 * cls.params.n_total
        psi_a, psi_b = tf_cross_correlation_initial(
            grid, cls.params, stationary_radius(cls.params), n_a, cls.params.n_total - n_a,
            delta_phi=0.4,
        )
        cls.initial = normalized(CoupledField(psi_a, psi_b, AB))
        cls.trajectory = evolve(cls.initial, cls.params, config, 2048, record_every=8).trajectory

    def test_initial_reduction(self):
        reduced = two_mode_reduction(self.initial, self.params)
        self.assertAlmostEqual(reduced.delta_phi, 0.4, places=12)
        self.assertAlmostEqual(reduced.delta_n / self.params.n_total, 0.4, places=3)

    def test_matches_two_mode_closed_forms(self):
        state0 = two_mode_reduction(self.initial, self.params)
        times = self.trajectory.times
        delta_n = self.trajectory.n_first - self.trajectory.n_second
        np.testing.assert_allclose(delta_n, closed_form_delta_n(state0, self.params, times),
                                   atol=0.02 * self.params.n_total)
        np.testing.assert_allclose(self.trajectory.relative_phase,
                                   closed_form_phase(state0, self.params, times), atol=0.02)

    def test_phase_oscillates_at_twice_lambda(self):
        times = self.trajectory.times[:256]
        phase = self.trajectory.relative_phase[:256]
        omega = dominant_frequency(times, phase)
        self.assertLessEqual(abs(omega - 2 * self.params.lambda_coupling),
                             frequency_resolution(times))
