import math

import numpy as np
from django.test import SimpleTestCase
from scipy import linalg
from scipy.integrate import cumulative_trapezoid, trapezoid

from core.exceptions import FitError, GridMismatchError, PhysicalDomainError
from core.grid import RadialField, RadialGrid
from core.params import make_params
from hydro.thomas_fermi import stationary_radius
from hydro.zero_order import stationary_zero_order

from .generator import (
    AVERAGED,
    BRACKET_ONLY,
    P_REL,
    P_TOT,
    Q_REL,
    Q_TOT,
    GeneratorMatrix,
    GeneratorSource,
    assemble_generator,
)
from .overlaps import ModeFunctions, mode_overlaps, overlap
from .propagation import (
    MomentState,
    column_names,
    correlation_decay,
    fit_gaussian_decay,
    initial_moments,
    propagate_moments,
)


def tf_params(delta_omega_sq=0.0, lambda_coupling=5.0):
    params = make_params({
        "n_total": 1e4, "omega_a": 1.0, "omega_b": 1.0,
        "scattering_length": 0.02, "lambda_coupling": lambda_coupling,
    })
    return params.with_delta_omega_sq(delta_omega_sq)


def generic_generator():
    f = np.zeros((4, 4))
    f[Q_TOT, P_TOT] = 0.7
    f[P_REL, P_REL] = 0.3
    f[P_REL, Q_REL] = -1.1
    f[Q_REL, P_REL] = 0.9
    f[Q_REL, Q_REL] = -0.3
    return GeneratorMatrix(f)


class OverlapTests(SimpleTestCase):

    def setUp(self):
        self.grid = RadialGrid.uniform(3.0, 201)
        r = self.grid.nodes
        self.x = RadialField(self.grid, np.exp(-r ** 2) * (1 + 0.5j * r))
        self.y = RadialField(self.grid, np.exp(-r ** 2 / 2 + 0.3j * r ** 2))

    def test_vanishes_without_trap_difference(self):
        self.assertEqual(overlap(self.x, self.y, tf_params(), 0.4), 0)

    def test_conjugation_swaps_carrier(self):
        params = tf_params(0.1)
        forward = overlap(self.x, self.y, params, 0.37)
        backward = overlap(self.y, self.x, params, -0.37)
        self.assertAlmostEqual(np.conj(forward), backward, places=14)

    def test_linear_in_ket_antilinear_in_bra(self):
        params = tf_params(0.1)
        c = 0.4 - 1.3j
        base = overlap(self.x, self.y, params, 0.2)
        self.assertAlmostEqual(overlap(self.x, self.y * c, params, 0.2), c * base, places=13)
        self.assertAlmostEqual(overlap(self.x * c, self.y, params, 0.2), np.conj(c) * base,
                               places=13)

    def test_grids_must_match(self):
        other = RadialField.zeros(RadialGrid.uniform(2.0, 201))
        with self.assertRaises(GridMismatchError):
            overlap(self.x, other, tf_params(0.1), 0.0)

    def test_thomas_fermi_closed_form(self):
        params = tf_params(0.1)
        zo = stationary_zero_order(params, population_fraction=0.7, delta_b=0.25)
        t = 0.13
        value = mode_overlaps(zo, params, t).phi_psi
        r0 = stationary_radius(params)
        radial = params.delta_omega_sq / 2 * 4 * math.pi * r0 ** 5 / 5
        expected = (zo.alpha * math.sqrt(0.3 / 0.7) * radial
                    * np.exp(-0.25j) * np.exp(-2j * params.lambda_coupling * t))
        self.assertAlmostEqual(abs(value - expected) / abs(expected), 0.0, places=8)


class GeneratorTests(SimpleTestCase):

    def test_symmetric_case_has_one_entry(self):
        params = tf_params()
        zo = stationary_zero_order(params)
        f = assemble_generator(zo, params, 0.3).f
        n_u = params.n_total * zo.u_tilde
        self.assertAlmostEqual(f[Q_TOT, P_TOT] / n_u, 1.0, places=12)
        f_rest = f.copy()
        f_rest[Q_TOT, P_TOT] = 0.0
        self.assertLess(np.max(np.abs(f_rest)), 1e-9 * n_u)

    def test_symmetric_overlaps_match_zero_order(self):
        params = tf_params()
        integrals = mode_overlaps(stationary_zero_order(params), params, 0.0)
        self.assertAlmostEqual(integrals.gamma_sum, 1.0, places=6)
        self.assertAlmostEqual(integrals.u_tilde / (4 * params.u0 * 3
                               / (8 * math.pi * stationary_radius(params) ** 3)), 1.0, places=6)

    def test_blocks_never_couple(self):
        params = tf_params(0.2)
        zo = stationary_zero_order(params, population_fraction=0.6, delta_b=0.3)
        for grouping in ("outer", BRACKET_ONLY):
            f = assemble_generator(zo, params, 0.21, grouping).f
            np.testing.assert_array_equal(f[:2, 2:], 0.0)
            np.testing.assert_array_equal(f[2:, :2], 0.0)
            np.testing.assert_array_equal(f[P_TOT], 0.0)

    def test_damping_entry_follows_carrier(self):
        params = tf_params(0.2)
        zo = stationary_zero_order(params, population_fraction=0.6, delta_b=0.3)
        t = 0.05
        now = assemble_generator(zo, params, t).entry("P_rel", "P_rel")
        later = assemble_generator(zo, params, t + math.pi / (2 * params.lambda_coupling))
        self.assertNotEqual(now, 0.0)
        self.assertAlmostEqual(later.entry("P_rel", "P_rel") / now, -1.0, places=9)

    def test_grouping_changes_symmetric_factor_four(self):
        params = tf_params(0.2)
        zo = stationary_zero_order(params)
        outer = assemble_generator(zo, params, 0.0).entry("Q_rel", "P_rel")
        bracket = assemble_generator(zo, params, 0.0, BRACKET_ONLY).entry("Q_rel", "P_rel")
        self.assertAlmostEqual(outer / bracket, 4.0, places=10)

    def test_non_positive_gamma(self):
        params = tf_params(0.1)
        grid = RadialGrid.uniform(2.0, 101)
        psi = RadialField(grid, np.exp(-grid.nodes ** 2))
        modes = ModeFunctions.from_fields(psi, psi, -psi, psi, params, u_tilde=0.1)
        with self.assertRaises(PhysicalDomainError):
            assemble_generator(modes, params, 0.0)

    def test_invalid_generator(self):
        f = np.zeros((4, 4))
        f[P_TOT, Q_TOT] = 1.0
        with self.assertRaises(ValueError):
            GeneratorMatrix(f)
        f = np.zeros((4, 4))
        f[Q_REL, Q_TOT] = 1.0
        with self.assertRaises(ValueError):
            GeneratorMatrix(f)

    def test_cycle_average_removes_carrier_terms(self):
        params = tf_params(0.2)
        zo = stationary_zero_order(params, population_fraction=0.6, delta_b=0.3)
        averaged = GeneratorSource(zo, params, coefficient_mode=AVERAGED)(0.4)
        self.assertLess(abs(averaged.entry("P_rel", "P_rel")), 1e-10)
        instantaneous = GeneratorSource(zo, params)(0.4)
        self.assertAlmostEqual(averaged.entry("Q_tot", "P_tot"),
                               instantaneous.entry("Q_tot", "P_tot"), places=10)

    def test_cycle_average_keeps_second_order_drift(self):
        params = tf_params(0.2)
        zo = stationary_zero_order(params, population_fraction=0.6, delta_b=0.3)
        period = math.pi / params.lambda_coupling
        times = 0.4 + np.linspace(-period / 2, period / 2, 2001)
        instantaneous = GeneratorSource(zo, params)
        samples = np.array([instantaneous(t).f for t in times])
        mean = trapezoid(samples, times, axis=0) / period
        w = cumulative_trapezoid(samples - mean, times, axis=0, initial=0.0)
        w -= trapezoid(w, times, axis=0) / period
        drift = trapezoid(np.einsum("nij,njk->nik", samples - mean, w), times, axis=0) / period
        averaged = GeneratorSource(zo, params, coefficient_mode=AVERAGED)(0.4)
        self.assertNotEqual(drift[P_REL, Q_REL], 0.0)
        self.assertAlmostEqual(averaged.f[P_REL, Q_REL] / (mean + drift)[P_REL, Q_REL], 1.0,
                               delta=1e-3)
        np.testing.assert_allclose(averaged.f, mean + drift, rtol=1e-3,
                                   atol=1e-6 * np.abs(samples).max())

    def test_averaging_needs_coupling(self):
        params = tf_params(0.2, lambda_coupling=0.0)
        with self.assertRaises(PhysicalDomainError):
            GeneratorSource(stationary_zero_order(params), params, coefficient_mode=AVERAGED)


class PropagationTests(SimpleTestCase):

    def test_symmetric_case(self):
        params = tf_params()
        zo = stationary_zero_order(params)
        source = GeneratorSource(zo, params)
        m0 = initial_moments(mean=(0.8, 0.1, 0.0, 0.2), var_p_tot=2.0, var_q_tot=0.5)
        times = np.linspace(0.0, 2.0, 41)
        trajectory = propagate_moments(m0, source, times)
        slope = params.n_total * zo.u_tilde
        np.testing.assert_allclose(trajectory.mean_of("Q_tot"), 0.1 + slope * 0.8 * times,
                                   rtol=1e-8)
        np.testing.assert_allclose(trajectory.variance_of("Q_tot"),
                                   0.5 + 2.0 * slope ** 2 * times ** 2, rtol=1e-8)
        for name in ("P_tot", "P_rel", "Q_rel"):
            np.testing.assert_allclose(trajectory.variance_of(name),
                                       m0.variance(name), rtol=1e-10)
        np.testing.assert_allclose(trajectory.mean_of("Q_rel"), 0.2, rtol=1e-10)
        np.testing.assert_allclose(correlation_decay(trajectory), 1.0, atol=1e-10)

    def test_zero_generator_is_identity(self):
        m0 = initial_moments(mean=(1.0, 2.0, 3.0, 4.0), var_p_tot=1.0)
        trajectory = propagate_moments(m0, GeneratorMatrix.zero(), [0.0, 1.0, 5.0])
        for state in trajectory.states():
            np.testing.assert_array_equal(state.mean, m0.mean)
            np.testing.assert_array_equal(state.cov, m0.cov)

    def test_constant_generator_matches_exponential(self):
        generator = generic_generator()
        cov = np.array([[1.0, 0.2, 0.0, 0.0],
                        [0.2, 0.5, 0.0, 0.0],
                        [0.0, 0.0, 2.0, -0.3],
                        [0.0, 0.0, -0.3, 0.4]])
        m0 = MomentState([0.5, -0.2, 1.0, 0.3], cov)
        times = np.array([0.0, 0.7, 1.5])
        trajectory = propagate_moments(m0, generator, times, max_step=1e-3)
        for k, t in enumerate(times):
            flow = linalg.expm(generator.f * t)
            np.testing.assert_allclose(trajectory.means[k], flow @ m0.mean, rtol=1e-8, atol=1e-12)
            np.testing.assert_allclose(trajectory.covs[k], flow @ cov @ flow.T,
                                       rtol=1e-8, atol=1e-12)

    def test_blocks_evolve_independently(self):
        generator = generic_generator()
        times = np.linspace(0.0, 3.0, 31)
        base = propagate_moments(initial_moments(), generator, times, max_step=1e-2)
        shifted = propagate_moments(
            initial_moments(mean=(3.0, -1.0, 0.0, 0.0), var_p_tot=4.0, var_q_tot=1.0),
            generator, times, max_step=1e-2,
        )
        np.testing.assert_allclose(shifted.means[:, 2:], base.means[:, 2:], rtol=1e-14)
        np.testing.assert_allclose(shifted.covs[:, 2:, 2:], base.covs[:, 2:, 2:], rtol=1e-14)

    def test_covariance_stays_positive(self):
        trajectory = propagate_moments(initial_moments(var_p_tot=1.0, var_q_tot=1.0),
                                       generic_generator(), np.linspace(0, 4, 9), max_step=1e-2)
        for cov in trajectory.covs:
            np.testing.assert_array_equal(cov, cov.T)
            self.assertGreaterEqual(np.linalg.eigvalsh(cov).min(), -1e-10 * np.trace(cov))

    def test_rejects_indefinite_covariance(self):
        with self.assertRaises(PhysicalDomainError):
            MomentState(np.zeros(4), np.diag([1.0, -0.5, 1.0, 1.0]))
        with self.assertRaises(PhysicalDomainError):
            MomentState(np.zeros(4), [[1, 2, 0, 0], [2, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1]])

    def test_rows_and_columns(self):
        trajectory = propagate_moments(initial_moments(), generic_generator(),
                                       [0.0, 0.5, 1.0], max_step=1e-2)
        rows = trajectory.as_rows()
        self.assertEqual(rows.shape, (3, len(column_names())))
        self.assertEqual(column_names()[-1], "correlation_decay")
        self.assertEqual(rows[0, -1], 1.0)


class CorrelationDecayTests(SimpleTestCase):

    def test_ln_two_halves_the_correlation(self):
        cov0 = np.zeros((4, 4))
        cov1 = np.diag([0.0, 0.0, 0.0, math.log(2)])

        class Trajectory:
            covs = np.array([cov0, cov1])
            means = np.zeros((2, 4))

            def second_moment_of(self, name):
                return self.covs[:, Q_REL, Q_REL] + self.means[:, Q_REL] ** 2

        np.testing.assert_allclose(correlation_decay(Trajectory()), [1.0, 0.5])

    def test_needs_gaussian_state(self):
        trajectory = propagate_moments(initial_moments(), GeneratorMatrix.zero(), [0.0, 1.0])
        with self.assertRaises(PhysicalDomainError):
            correlation_decay(trajectory, gaussian_state=False)

    def test_linear_phase_growth_gives_gaussian(self):
        # d Q_rel / dt = k P_rel with <P_rel> = 0 makes Var(Q_rel) grow as k^2 Var(P_rel) t^2
        f = np.zeros((4, 4))
        f[Q_REL, P_REL] = 0.5
        times = np.linspace(0.0, 4.0, 81)
        trajectory = propagate_moments(initial_moments(var_p_rel=2.0), GeneratorMatrix(f), times,
                                       max_step=1e-2)
        decay = correlation_decay(trajectory)
        tau = fit_gaussian_decay(times, decay)
        expected = 1.0 / math.sqrt(0.5 ** 2 * 2.0)
        self.assertAlmostEqual(tau / expected, 1.0, delta=0.02)

    def test_fit_failures(self):
        with self.assertRaises(FitError):
            fit_gaussian_decay([0.0, 1.0], [1.0, 0.5])
        with self.assertRaises(FitError):
            fit_gaussian_decay([0.0, 1.0, 2.0], [1.0, 0.0, 0.5])
        with self.assertRaises(FitError):
            fit_gaussian_decay([0.0, 1.0, 2.0], [1.0, 1.5, 4.0])
