import math

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import PhysicalDomainError
from core.params import make_params
from core.spectral import dominant_frequency, frequency_resolution

from .dynamics import (
    TwoModeState,
    amplitude_A,
    closed_form_delta_n,
    closed_form_phase,
    evolve_many,
    evolve_two_mode,
    hamiltonian_c,
    populations,
)

N_ATOMS = 1000.0


def josephson_params(lambda_coupling=1.3):
    return make_params({
        "n_total": N_ATOMS, "omega_a": 1.0, "omega_b": 1.0,
        "lambda_coupling": lambda_coupling,
    })


class HamiltonianTests(SimpleTestCase):

    def setUp(self):
        self.params = josephson_params()

    def test_maximum_at_balanced_in_phase_state(self):
        c_value = hamiltonian_c(TwoModeState(0.0, 0.0), self.params)
        self.assertAlmostEqual(c_value, 2 * 1.3 * N_ATOMS, places=9)

    def test_quadrature_phase_gives_zero(self):
        self.assertAlmostEqual(hamiltonian_c(TwoModeState(100.0, math.pi / 2), self.params), 0.0)

    def test_full_transfer_gives_zero_for_any_phase(self):
        for phase in (0.0, 1.0, 2.5):
            self.assertEqual(hamiltonian_c(TwoModeState(N_ATOMS, phase), self.params), 0.0)
            self.assertEqual(hamiltonian_c(TwoModeState(-N_ATOMS, phase), self.params), 0.0)

    def test_population_beyond_total_is_rejected(self):
        with self.assertRaises(PhysicalDomainError):
            hamiltonian_c(TwoModeState(1.5 * N_ATOMS, 0.0), self.params)

    def test_populations_sum_to_total(self):
        n_a, n_b = populations(TwoModeState(200.0, 0.3), N_ATOMS)
        self.assertEqual((n_a, n_b), (600.0, 400.0))


class EvolutionTests(SimpleTestCase):

    def setUp(self):
        self.params = josephson_params()
        self.period = math.pi / self.params.lambda_coupling

    def test_balanced_in_phase_state_is_a_fixed_point(self):
        trajectory = evolve_two_mode(TwoModeState(0.0, 0.0), self.params,
                                     np.linspace(0, 3 * self.period, 7))
        np.testing.assert_allclose(trajectory.delta_n, 0.0, atol=1e-12)
        np.testing.assert_allclose(trajectory.delta_phi, 0.0, atol=1e-12)

    def test_no_coupling_freezes_populations(self):
        params = josephson_params(lambda_coupling=0.0)
        trajectory = evolve_two_mode(TwoModeState(123.0, 0.4), params, np.linspace(0, 10, 11))
        np.testing.assert_array_equal(trajectory.delta_n, 123.0)
        np.testing.assert_array_equal(trajectory.delta_phi, 0.4)

    def test_matches_closed_form_over_ten_periods(self):
        state0 = TwoModeState(0.2 * N_ATOMS, 0.0)
        times = np.linspace(0, 10 * self.period, 201)
        trajectory = evolve_two_mode(state0, self.params, times, steps_per_period=2000)
        expected = closed_form_delta_n(state0, self.params, times)
        self.assertLess(np.max(np.abs(trajectory.delta_n - expected)), 1e-6 * N_ATOMS)

    def test_random_states_agree_with_both_closed_forms(self):
        rng = np.random.default_rng(7)
        states = []
        while len(states) < 100:
            delta_n = rng.uniform(-0.8, 0.8) * N_ATOMS
            delta_phi = rng.uniform(-math.pi, math.pi)
            if abs(math.cos(delta_phi)) >= 0.5:
                states.append(TwoModeState(delta_n, delta_phi))
        times = np.linspace(0, 10 * self.period, 101)
        trajectories = evolve_many(states, self.params, times, steps_per_period=4000)
        for state0, trajectory in zip(states, trajectories):
            delta_n = closed_form_delta_n(state0, self.params, times)
            delta_phi = closed_form_phase(state0, self.params, times)
            self.assertLess(np.max(np.abs(trajectory.delta_n - delta_n)), 1e-6 * N_ATOMS)
            wrapped = np.angle(np.exp(1j * (trajectory.delta_phi - delta_phi)))
            self.assertLess(np.max(np.abs(wrapped)), 1e-6)
            c0 = trajectory.c_values[0]
            self.assertLess(np.max(np.abs(trajectory.c_values - c0)), 1e-8 * abs(c0))

    def test_oscillation_frequency_is_twice_lambda(self):
        samples = 512
        times = np.arange(samples) * (10 * self.period / samples)
        trajectory = evolve_two_mode(TwoModeState(0.3 * N_ATOMS, 0.2), self.params, times)
        omega = dominant_frequency(times, trajectory.delta_n)
        self.assertLessEqual(abs(omega - 2 * self.params.lambda_coupling),
                             frequency_resolution(times))

    def test_mirrored_population_negates_trajectory(self):
        times = np.linspace(0, 2 * self.period, 41)
        forward = evolve_two_mode(TwoModeState(250.0, 0.0), self.params, times)
        mirrored = evolve_two_mode(TwoModeState(-250.0, 0.0), self.params, times)
        np.testing.assert_allclose(mirrored.delta_n, -forward.delta_n, atol=1e-9 * N_ATOMS)
        np.testing.assert_allclose(mirrored.delta_phi, -forward.delta_phi, atol=1e-9)
        np.testing.assert_allclose(mirrored.c_values, forward.c_values, rtol=1e-12)

    def test_trajectory_rows_have_four_columns(self):
        trajectory = evolve_two_mode(TwoModeState(10.0, 0.1), self.params, [0.0, 0.5, 1.0])
        self.assertEqual(trajectory.as_rows().shape, (3, 4))


class ClosedFormTests(SimpleTestCase):

    def setUp(self):
        self.params = josephson_params()

    def test_amplitude_vanishes_at_fixed_point(self):
        self.assertEqual(amplitude_A(TwoModeState(0.0, 0.0), self.params), 0.0)

    def test_amplitude_is_total_for_quadrature_phase(self):
        self.assertAlmostEqual(amplitude_A(TwoModeState(0.0, math.pi / 2), self.params), N_ATOMS)

    def test_both_amplitude_expressions_agree(self):
        state0 = TwoModeState(0.3 * N_ATOMS, math.pi / 4)
        expected = N_ATOMS * math.sqrt(0.5 + 0.09 * 0.5)
        self.assertAlmostEqual(amplitude_A(state0, self.params) / expected, 1.0, places=12)

    def test_amplitude_needs_coupling(self):
        with self.assertRaises(PhysicalDomainError):
            amplitude_A(TwoModeState(1.0, 0.0), josephson_params(lambda_coupling=0.0))

    def test_initial_value_and_period(self):
        state0 = TwoModeState(0.37 * N_ATOMS, -0.8)
        period = math.pi / self.params.lambda_coupling
        self.assertAlmostEqual(closed_form_delta_n(state0, self.params, 0.0), state0.delta_n,
                               delta=1e-9 * N_ATOMS)
        self.assertAlmostEqual(closed_form_delta_n(state0, self.params, period),
                               state0.delta_n, delta=1e-9 * N_ATOMS)

    def test_slope_sign_follows_hamilton_equation(self):
        state0 = TwoModeState(0.0, math.pi / 2)
        lam = self.params.lambda_coupling
        times = np.linspace(0, 1, 9)
        np.testing.assert_allclose(closed_form_delta_n(state0, self.params, times),
                                   -N_ATOMS * np.sin(2 * lam * times), atol=1e-9 * N_ATOMS)

    def test_phase_starts_at_initial_value(self):
        for phase in (0.3, 2.8, -2.9, 7.0):
            state0 = TwoModeState(0.1 * N_ATOMS, phase)
            self.assertAlmostEqual(closed_form_phase(state0, self.params, 0.0), phase, places=12)

    def test_phase_slope_matches_hamilton_equation(self):
        state0 = TwoModeState(0.4 * N_ATOMS, 0.6)
        lam = self.params.lambda_coupling
        root = math.sqrt(N_ATOMS ** 2 - state0.delta_n ** 2)
        expected = 2 * lam * state0.delta_n * math.cos(state0.delta_phi) / root
        h = 1e-6
        slope = (closed_form_phase(state0, self.params, h)
                 - closed_form_phase(state0, self.params, -h)) / (2 * h)
        self.assertAlmostEqual(slope / expected, 1.0, places=6)

    def test_fixed_point_phase_stays_zero(self):
        times = np.linspace(0, 5, 11)
        np.testing.assert_array_equal(
            closed_form_phase(TwoModeState(0.0, 0.0), self.params, times), 0.0
        )

    def test_zero_c_is_rejected_by_phase(self):
        with self.assertRaises(PhysicalDomainError):
            closed_form_phase(TwoModeState(0.0, math.pi / 2), self.params, 1.0)
