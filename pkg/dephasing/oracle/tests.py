import math

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import FitError, InvalidFieldError, PhysicalDomainError
from core.grid import RadialField, RadialGrid, integrate_radial
from core.params import make_params
from core.spectral import dominant_frequency, frequency_resolution
from hydro.thomas_fermi import stationary_radius, tf_density

from .dynamics import (
    coherence,
    collapse_time,
    collapse_time_estimate,
    evolve_exact,
    revival_time,
    visibility,
)
from .two_mode import (
    FockVector,
    build_hamiltonian,
    coherent_state,
    number_squeezed_state,
    project_two_mode,
)


class FockVectorTests(SimpleTestCase):

    def test_unnormalized_amplitudes_are_rejected(self):
        with self.assertRaises(InvalidFieldError):
            FockVector(np.array([1.0, 1.0]))

    def test_normalized_builds_unit_vector(self):
        state = FockVector.normalized([3.0, 4.0j])
        self.assertAlmostEqual(state.probabilities.sum(), 1.0, places=14)
        self.assertEqual(state.n_atoms, 1)

    def test_coherent_state_populations(self):
        state = coherent_state(120, population_fraction=0.25, phase=0.7)
        mean_n_a = state.probabilities @ np.arange(121)
        self.assertAlmostEqual(mean_n_a, 30.0, places=9)

    def test_coherent_state_phase_convention(self):
        state = coherent_state(50, population_fraction=0.5, phase=0.7)
        trajectory = evolve_exact(state, build_hamiltonian(50, 0.0, 0.0), [0.0])
        self.assertAlmostEqual(np.angle(trajectory.tunnelling_expectation()[0]), -0.7, places=12)
        self.assertAlmostEqual(visibility(trajectory)[0], 1.0, places=12)

    def test_number_squeezed_variance(self):
        state = number_squeezed_state(400, width=5.0)
        trajectory = evolve_exact(state, build_hamiltonian(400, 0.0, 0.0), [0.0])
        self.assertAlmostEqual(trajectory.var_delta_n()[0], 4 * 25.0, delta=1e-6)

    def test_too_many_atoms(self):
        with self.assertRaises(PhysicalDomainError):
            build_hamiltonian(5001, 1.0, 0.0)


class HamiltonianTests(SimpleTestCase):

    def test_single_atom_rabi_doublet(self):
        energies, _ = build_hamiltonian(1, 0.8, 0.0).eigensystem
        np.testing.assert_allclose(energies, [-0.8, 0.8], atol=1e-14)

    def test_tridiagonal_structure(self):
        h = build_hamiltonian(6, 1.1, 0.2, delta_e=0.3, interaction_asymmetry=0.05)
        matrix = h.matrix()
        np.testing.assert_array_equal(matrix, matrix.T)
        self.assertTrue(np.all(np.triu(matrix, 2) == 0))
        k = np.arange(6)
        np.testing.assert_allclose(np.diag(matrix, 1), -1.1 * np.sqrt((k + 1) * (6 - k)))

    def test_no_coupling_is_diagonal(self):
        h = build_hamiltonian(10, 0.0, 0.3, delta_e=0.1, interaction_asymmetry=0.02)
        matrix = h.matrix()
        np.testing.assert_array_equal(matrix, np.diag(np.diag(matrix)))
        energies, _ = h.eigensystem
        np.testing.assert_allclose(energies, np.sort(np.diag(matrix)), atol=1e-12)

    def test_equal_interactions_shift_the_spectrum(self):
        n_atoms, u_int = 40, 0.3
        free, _ = build_hamiltonian(n_atoms, 1.0, 0.0, delta_e=0.2).eigensystem
        interacting, _ = build_hamiltonian(n_atoms, 1.0, u_int, delta_e=0.2).eigensystem
        shift = 0.5 * u_int * n_atoms * (n_atoms - 1)
        np.testing.assert_allclose(interacting - free, shift, atol=1e-9 * shift)

    def test_apply_matches_dense_matrix(self):
        h = build_hamiltonian(8, 0.7, 0.1, delta_e=-0.2, interaction_asymmetry=0.03)
        vector = coherent_state(8, 0.4, 1.2).amplitudes
        np.testing.assert_allclose(h.apply(vector), h.matrix() @ vector, atol=1e-13)

    def test_chi_from_asymmetry(self):
        self.assertAlmostEqual(build_hamiltonian(10, 1.0, 0.5, interaction_asymmetry=0.2).chi, 0.05)


class EvolutionTests(SimpleTestCase):

    def setUp(self):
        self.h = build_hamiltonian(100, 1.0, 0.02, delta_e=0.1, interaction_asymmetry=0.01)
        self.state = coherent_state(100, population_fraction=0.3, phase=0.4)
        self.times = np.linspace(0.0, 10.0, 201)

    def test_norm_and_energy_are_conserved(self):
        trajectory = evolve_exact(self.state, self.h, self.times)
        np.testing.assert_allclose(trajectory.norms(), 1.0, atol=1e-12)
        energies = trajectory.energies(self.h)
        self.assertLess(np.max(np.abs(energies - energies[0])), 1e-10 * abs(energies[0]))

    def test_time_reversal(self):
        forward = evolve_exact(self.state, self.h, [7.3])
        back = evolve_exact(FockVector.normalized(forward.amplitudes[0]), self.h, [-7.3])
        np.testing.assert_allclose(back.amplitudes[0], self.state.amplitudes, atol=1e-10)

    def test_eigenstate_is_stationary(self):
        _, vectors = self.h.eigensystem
        trajectory = evolve_exact(FockVector.normalized(vectors[:, 3]), self.h, self.times)
        np.testing.assert_allclose(trajectory.probabilities, trajectory.probabilities[:1],
                                   atol=1e-12)

    def test_visibility_is_bounded(self):
        trajectory = evolve_exact(self.state, self.h, self.times)
        self.assertTrue(np.all(visibility(trajectory) <= 1 + 1e-12))
        self.assertTrue(np.all(coherence(trajectory) <= 1 + 1e-12))

    def test_atom_number_mismatch(self):
        with self.assertRaises(ValueError):
            evolve_exact(coherent_state(10), self.h, self.times)

    def test_rows_have_four_columns(self):
        self.assertEqual(evolve_exact(self.state, self.h, self.times).as_rows().shape, (201, 4))


class JosephsonFrequencyTests(SimpleTestCase):

    n_atoms = 200

    def run_transfer(self, u_int, interaction_asymmetry=0.0, n_periods=200):
        h = build_hamiltonian(self.n_atoms, 1.0, u_int, interaction_asymmetry=interaction_asymmetry)
        times = np.linspace(0.0, n_periods * math.pi, 16 * n_periods, endpoint=False)
        return times, evolve_exact(coherent_state(self.n_atoms, 1.0), h, times)

    def test_free_transfer_is_the_rabi_cosine(self):
        times, trajectory = self.run_transfer(0.0, n_periods=5)
        np.testing.assert_allclose(trajectory.mean_delta_n(), self.n_atoms * np.cos(2 * times),
                                   atol=1e-8 * self.n_atoms)

    def test_equal_interactions_leave_populations_unchanged(self):
        _, free = self.run_transfer(0.0, n_periods=5)
        _, interacting = self.run_transfer(0.05, n_periods=5)
        np.testing.assert_allclose(interacting.mean_delta_n(), free.mean_delta_n(),
                                   atol=1e-9 * self.n_atoms)

    def test_frequency_with_small_nonlinearity(self):
        times, trajectory = self.run_transfer(1e-3, interaction_asymmetry=1e-5)
        omega = dominant_frequency(times, trajectory.mean_delta_n())
        self.assertLessEqual(abs(omega - 2.0), frequency_resolution(times))
        self.assertLess(abs(omega - 2.0) / 2.0, 0.01)


class DephasingTests(SimpleTestCase):

    n_atoms = 400

    def test_equal_interactions_keep_visibility(self):
        h = build_hamiltonian(self.n_atoms, 0.0, 0.05, delta_e=0.3)
        trajectory = evolve_exact(coherent_state(self.n_atoms), h, np.linspace(0.0, 20.0, 101))
        np.testing.assert_allclose(visibility(trajectory), 1.0, atol=1e-10)

    def test_collapse_matches_gaussian_estimate(self):
        h = build_hamiltonian(self.n_atoms, 0.0, 0.05, interaction_asymmetry=0.01)
        state = number_squeezed_state(self.n_atoms, width=4.0)
        var_n_rel = evolve_exact(state, h, [0.0]).var_delta_n()[0]
        estimate = collapse_time_estimate(h, var_n_rel)
        times = np.linspace(0.0, 3.0 * estimate, 301)
        fitted = collapse_time(times, visibility(evolve_exact(state, h, times)))
        self.assertAlmostEqual(fitted / estimate, 1.0, delta=0.05)

    def test_collapse_rate_grows_with_number_spread(self):
        h = build_hamiltonian(self.n_atoms, 0.0, 0.05, interaction_asymmetry=0.01)
        spreads, rates = [], []
        for width in (2.0, 3.0, 4.0, 6.0, 8.0):
            state = number_squeezed_state(self.n_atoms, width=width)
            spread = math.sqrt(evolve_exact(state, h, [0.0]).var_delta_n()[0])
            times = np.linspace(0.0, 3.0 * collapse_time_estimate(h, spread ** 2), 301)
            rates.append(1.0 / collapse_time(times, visibility(evolve_exact(state, h, times))))
            spreads.append(spread)
        self.assertTrue(np.all(np.diff(spreads) > 0))
        self.assertTrue(np.all(np.diff(rates) > 0))
        # t_c ~ 1 / (chi sqrt(Var(n_rel))): the rate over the spread is constant
        np.testing.assert_allclose(np.array(rates) / spreads, rates[0] / spreads[0], rtol=0.05)

    def test_revival_at_kerr_period(self):
        h = build_hamiltonian(50, 0.0, 0.1, interaction_asymmetry=0.2)
        t_rev = revival_time(h)
        self.assertAlmostEqual(t_rev, math.pi / (4 * 0.05))
        trajectory = evolve_exact(coherent_state(50), h, [0.0, t_rev / 2, t_rev])
        values = visibility(trajectory)
        self.assertLess(values[1], 0.05)
        self.assertAlmostEqual(values[2], values[0], places=10)

    def test_no_asymmetry_never_collapses(self):
        self.assertEqual(revival_time(build_hamiltonian(10, 0.0, 0.1)), math.inf)

    def test_collapse_fit_needs_samples(self):
        with self.assertRaises(FitError):
            collapse_time([0.0, 1.0, 2.0], [1.0, 0.1, 0.01])


class ProjectionTests(SimpleTestCase):

    def setUp(self):
        self.params = make_params({
            "n_total": 1e5, "omega_a": 1.0, "omega_b": 1.0,
            "scattering_length": 0.01, "lambda_coupling": 2.0,
        }).with_delta_omega_sq(0.01)

    def test_matches_mode_integrals(self):
        projection = project_two_mode(self.params, n_atoms=500)
        r0 = stationary_radius(self.params)
        grid = RadialGrid.uniform(r0, 2001)
        mode = RadialField.from_function(grid, lambda r: tf_density(r, r0, 1.0))
        u_int = self.params.u0 * integrate_radial(mode * mode)
        delta_e = 2 * integrate_radial(mode * RadialField.from_function(grid, self.params.delta_v))
        self.assertAlmostEqual(projection.u_int / u_int, 1.0, places=8)
        self.assertAlmostEqual(projection.delta_e / delta_e, 1.0, places=8)
        self.assertEqual(projection.n_atoms, 500)

    def test_hamiltonian_from_projection(self):
        h = project_two_mode(self.params, n_atoms=20).hamiltonian(interaction_asymmetry=1e-3)
        self.assertEqual(h.n_atoms, 20)
        self.assertAlmostEqual(h.chi, 2.5e-4)

    def test_default_atom_number_is_too_large(self):
        with self.assertRaises(PhysicalDomainError):
            project_two_mode(self.params)
