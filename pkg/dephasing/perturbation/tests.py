import math

import numpy as np
from django.test import SimpleTestCase

from core.exceptions import PhysicalDomainError, ResonanceError
from core.params import make_params
from core.spectral import dominant_frequency, frequency_resolution
from hydro.zero_order import stationary_zero_order
from moments.generator import AVERAGED, P_REL, Q_REL, GeneratorSource
from moments.propagation import (
    correlation_decay,
    fit_gaussian_decay,
    initial_moments,
    propagate_moments,
)

from .coefficients import (
    IMBALANCE,
    PerturbationCoefficients,
    dephasing_rate,
    number_scaling_exponent,
    perturbation_parameter,
    q1_amplitude,
    q1_closed_form,
    q2_closed_form,
)
from .first_order import (
    boundary_zero_order,
    corrected_modes,
    linearized_residual,
    q1_numeric,
    regularized_phi_phi,
    secular_terms,
    solve_first_order_phi,
    solve_first_order_psi,
)
from .secular import (
    SAMPLES_PER_PERIOD,
    CorrectedGenerator,
    fit_secular_slope,
    secular_growth_check,
)


def tf_params(delta_omega_sq=0.01, lambda_coupling=5.0):
    params = make_params({
        "n_total": 1e5, "omega_a": 1.0, "omega_b": 1.0,
        "scattering_length": 0.01, "lambda_coupling": lambda_coupling,
    })
    return params.with_delta_omega_sq(delta_omega_sq)


def artanh_integral(x_max, power):
    """Integral of x^power / (1 - x^2) from 0 to x_max for even power."""
    total = math.atanh(x_max)
    for k in range(1, power // 2 + 1):
        total -= x_max ** (2 * k - 1) / (2 * k - 1)
    return total


def fit_oscillation(times, q_rel, lambda_coupling):
    """Fits q_rel to 1, t, cos 2 lambda t, sin 2 lambda t; returns (amplitude, coefficients)."""
    phase = 2 * lambda_coupling * times
    design = np.column_stack([np.ones_like(times), times, np.cos(phase), np.sin(phase)])
    coefficients, *_ = np.linalg.lstsq(design, q_rel, rcond=None)
    return math.hypot(coefficients[2], coefficients[3]), coefficients


def corrected_source(params, population_fraction=0.7, n_points=513):
    zo = stationary_zero_order(params, population_fraction)
    boundary = boundary_zero_order(zo, params, n_points=n_points)
    corrections = solve_first_order_phi(zo, solve_first_order_psi(boundary, params), params)
    return CorrectedGenerator(zo, corrections, params)


class PerturbationParameterTests(SimpleTestCase):

    def test_symmetric_trap_gives_zero(self):
        self.assertEqual(perturbation_parameter(tf_params(0.0)), 0.0)

    def test_formula(self):
        params = tf_params(0.01)
        expected = params.delta_omega_sq * 3.0 ** 2 / (2 * params.lambda_coupling)
        self.assertAlmostEqual(perturbation_parameter(params, 3.0), expected, places=14)

    def test_doubling_r0_quadruples_v(self):
        params = tf_params(0.01)
        ratio = perturbation_parameter(params, 4.0) / perturbation_parameter(params, 2.0)
        self.assertAlmostEqual(ratio, 4.0, places=12)

    def test_lambda_zero_raises(self):
        with self.assertRaises(PhysicalDomainError):
            perturbation_parameter(tf_params(0.01, lambda_coupling=0.0))

    def test_number_scaling_exponent(self):
        self.assertAlmostEqual(number_scaling_exponent(tf_params(0.01), 32.0), 0.4, places=9)

    def test_scaling_needs_asymmetry(self):
        with self.assertRaises(PhysicalDomainError):
            number_scaling_exponent(tf_params(0.0))


class DephasingRateTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.params = tf_params(0.01)
        cls.zo = stationary_zero_order(cls.params, 0.7)
        cls.balanced = stationary_zero_order(cls.params, 0.5)

    def test_zero_asymmetry_gives_infinite_time(self):
        coefficients = dephasing_rate(tf_params(0.0), self.zo, 1.0)
        self.assertEqual(coefficients.rate, 0.0)
        self.assertEqual(coefficients.tau_d, math.inf)
        self.assertEqual(coefficients.tau_d_imbalance, math.inf)

    def test_zero_number_variance_gives_infinite_time(self):
        self.assertEqual(dephasing_rate(self.params, self.zo, 0.0).tau_d, math.inf)

    def test_rate_scales_as_v_squared(self):
        base = dephasing_rate(self.params, self.zo, 1.0).rate
        doubled = dephasing_rate(tf_params(0.02), self.zo, 1.0).rate
        quadrupled = dephasing_rate(tf_params(0.04), self.zo, 1.0).rate
        self.assertAlmostEqual(doubled / base, 4.0, places=10)
        self.assertAlmostEqual(quadrupled / base, 16.0, places=9)

    def test_rate_scales_with_number_spread(self):
        base = dephasing_rate(self.params, self.zo, 1.0).rate
        self.assertAlmostEqual(dephasing_rate(self.params, self.zo, 4.0).rate / base, 2.0,
                               places=12)

    def test_variants_differ_by_population_imbalance(self):
        coefficients = dephasing_rate(self.params, self.zo, 1.0)
        self.assertAlmostEqual(coefficients.rate_imbalance / coefficients.rate_total,
                               0.4, places=12)
        self.assertGreater(coefficients.tau_d, 0)

    def test_balanced_populations(self):
        coefficients = dephasing_rate(self.params, self.balanced, 1.0, variant=IMBALANCE)
        self.assertGreater(coefficients.rate_total, 0)
        self.assertEqual(coefficients.rate, 0.0)
        self.assertEqual(coefficients.tau_d, math.inf)
        self.assertEqual(coefficients.q2_rate, 0.0)

    def test_q1_amplitude_balanced(self):
        v = perturbation_parameter(self.params, self.balanced.r0)
        expected = 1.2 * v * math.log(2 * self.balanced.xi / self.balanced.r0) * 2.0
        self.assertAlmostEqual(q1_amplitude(self.balanced, self.params), expected, places=12)
        self.assertLess(expected, 0)

    def test_large_v_warns(self):
        with self.assertLogs("perturbation.coefficients", "WARNING"):
            dephasing_rate(tf_params(0.1), self.zo, 1.0)

    def test_negative_variance_raises(self):
        with self.assertRaises(PhysicalDomainError):
            dephasing_rate(self.params, self.zo, -1.0)

    def test_unknown_variant(self):
        with self.assertRaises(ValueError):
            PerturbationCoefficients(0.1, 0.1, 1.0, -1.0, 0.0, 0.0, 0.0, 0.0, variant="other")

    def test_report_dict(self):
        data = dephasing_rate(self.params, self.zo, 1.0).as_dict()
        for key in ("v", "xi_over_r0", "tau_d_total", "tau_d_imbalance", "q2_rate",
                    "q1_closed_form", "q2_closed_form"):
            self.assertIn(key, data)


class FirstOrderTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.params = tf_params(0.01)
        cls.zo = stationary_zero_order(cls.params, 0.7, delta_b=0.3)
        cls.boundary = boundary_zero_order(cls.zo, cls.params, n_points=1025)
        cls.psi = solve_first_order_psi(cls.boundary, cls.params)
        cls.full = solve_first_order_phi(cls.zo, cls.psi, cls.params)

    def boundary_form(self, name, params=None):
        params = params or self.params
        dv = params.delta_v(self.boundary.grid.nodes)
        return dv * self.boundary.field(name).values / (2 * params.hbar * params.lambda_coupling)

    def test_symmetric_trap_gives_zero(self):
        params = self.params.with_delta_omega_sq(0.0)
        corrections = solve_first_order_phi(
            self.zo, solve_first_order_psi(self.boundary, params), params
        )
        for name in ("a_plus", "b_plus", "a_minus", "b_minus",
                     "c_plus", "d_plus", "c_minus", "d_minus"):
            self.assertEqual(np.max(np.abs(getattr(corrections, name).values)), 0.0)

    def test_psi_corrections_follow_boundary_form(self):
        expected_b = self.boundary_form("psi_minus")
        expected_a = -self.boundary_form("psi_plus")
        atol = 1e-10 * np.max(np.abs(expected_b))
        np.testing.assert_allclose(self.psi.b_plus.values, expected_b, rtol=1e-8, atol=atol)
        np.testing.assert_allclose(self.psi.a_minus.values, expected_a, rtol=1e-8, atol=atol)
        np.testing.assert_allclose(self.psi.a_plus.values, 0.0, atol=atol)
        np.testing.assert_allclose(self.psi.b_minus.values, 0.0, atol=atol)

    def test_phi_corrections_follow_boundary_form(self):
        expected_d = self.boundary_form("phi_minus")
        expected_c = -self.boundary_form("phi_plus")
        atol = 1e-9 * np.max(np.abs(expected_d))
        np.testing.assert_allclose(self.full.d_plus.values, expected_d, rtol=1e-7, atol=atol)
        np.testing.assert_allclose(self.full.c_minus.values, expected_c, rtol=1e-7, atol=atol)
        np.testing.assert_allclose(self.full.c_plus.values, 0.0, atol=atol)
        np.testing.assert_allclose(self.full.d_minus.values, 0.0, atol=atol)

    def test_ratio_at_cut(self):
        ratio = abs(self.full.d_plus.values[-1]) / abs(self.boundary_form("phi_minus")[-1])
        self.assertAlmostEqual(ratio, 1.0, delta=0.05)
        ratio = abs(self.psi.b_plus.values[-1]) / abs(self.boundary_form("psi_minus")[-1])
        self.assertAlmostEqual(ratio, 1.0, delta=0.05)

    def test_linearized_equations_hold(self):
        residual = linearized_residual(self.full, self.params)
        self.assertLessEqual(residual["psi"], 1e-8)
        self.assertLessEqual(residual["phi"], 1e-8)
        self.assertIsNone(linearized_residual(self.psi, self.params)["phi"])

    def test_linear_in_asymmetry(self):
        doubled = self.params.with_delta_omega_sq(0.02)
        corrections = solve_first_order_phi(
            self.zo, solve_first_order_psi(self.boundary, doubled), doubled
        )
        for name in ("b_plus", "a_minus", "d_plus", "c_minus"):
            np.testing.assert_allclose(getattr(corrections, name).values,
                                       2 * getattr(self.full, name).values, rtol=1e-10)

    def test_no_resonant_nodes(self):
        self.assertEqual(self.full.excluded_fraction, 0.0)
        self.assertFalse(np.any(self.full.excluded))

    def test_resonance_threshold(self):
        with self.assertRaises(ResonanceError) as caught:
            solve_first_order_psi(self.boundary, self.params, max_condition=1.0)
        self.assertGreater(caught.exception.diagnostics["excluded_fraction"], 0.01)

    def test_lambda_zero_raises(self):
        with self.assertRaises(PhysicalDomainError):
            solve_first_order_psi(self.boundary, tf_params(0.01, lambda_coupling=0.0))

    def test_mismatched_zero_order(self):
        other = stationary_zero_order(self.params, 0.5)
        with self.assertRaises(ValueError):
            solve_first_order_phi(other, self.psi, self.params)

    def test_uniform_input_is_resampled(self):
        corrections = solve_first_order_psi(self.zo, self.params)
        self.assertEqual(corrections.grid.kind, "graded")
        self.assertAlmostEqual(corrections.grid.r_max, self.zo.r0 - self.zo.xi, places=12)

    def test_rows(self):
        rows = self.full.as_rows()
        self.assertEqual(rows.shape, (self.boundary.grid.n_points, 9))
        self.assertEqual(len(self.full.column_names()), 9)


class RegularizedOverlapTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.params = tf_params(0.01)
        cls.zo = stationary_zero_order(cls.params, 0.7, delta_b=0.3)
        cls.v = perturbation_parameter(cls.params, cls.zo.r0)

    def secular_overlap(self, xi):
        boundary = boundary_zero_order(self.zo, self.params, xi=xi)
        corrections = solve_first_order_phi(
            self.zo, solve_first_order_psi(boundary, self.params), self.params
        )
        return secular_terms(self.zo, corrections, self.params)

    def test_secular_overlap_closed_form(self):
        lam = self.params.lambda_coupling
        for ratio in (1e-4, 1e-2):
            terms = self.secular_overlap(ratio * self.zo.r0)
            j = artanh_integral(1 - ratio, 6)
            expected_plus = 0.15 * self.v ** 2 * lam * self.zo.n_total / self.zo.n_minus * j
            expected_minus = -0.15 * self.v ** 2 * lam * self.zo.n_total / self.zo.n_plus * j
            self.assertAlmostEqual(terms.plus_first / expected_plus, 1.0, delta=0.01)
            self.assertAlmostEqual(terms.minus_first / expected_minus, 1.0, delta=0.01)

    def test_secular_overlap_log_coefficient(self):
        r0 = self.zo.r0
        wide = self.secular_overlap(1e-2 * r0).plus_first
        narrow = self.secular_overlap(1e-4 * r0).plus_first
        slope = (narrow - wide) / math.log(1e-2)
        expected = -3 / 40 * self.v ** 2 * self.params.lambda_coupling \
            * self.zo.n_total / self.zo.n_minus
        self.assertAlmostEqual(slope / expected, 1.0, delta=0.1)

    def test_secular_rate_carries_imbalance(self):
        terms = self.secular_overlap(1e-3 * self.zo.r0)
        balanced = stationary_zero_order(self.params, 0.5)
        boundary = boundary_zero_order(balanced, self.params, xi=1e-3 * self.zo.r0)
        corrections = solve_first_order_phi(
            balanced, solve_first_order_psi(boundary, self.params), self.params
        )
        even = secular_terms(balanced, corrections, self.params)
        self.assertNotEqual(terms.rate, 0.0)
        self.assertLess(abs(even.rate), 1e-8 * abs(terms.rate))

    def test_zero_order_log_slope(self):
        xi = 1e-3 * self.zo.r0
        boundary = boundary_zero_order(self.zo, self.params, xi=xi)
        overlap = regularized_phi_phi(boundary.phi_plus, boundary.phi_minus, self.params,
                                      xi, self.zo.r0)
        n = self.zo.n_total
        expected = 0.15 * self.v * self.params.lambda_coupling * n / math.sqrt(
            self.zo.n_plus * self.zo.n_minus)
        self.assertAlmostEqual(abs(overlap.log_slope) / expected, 1.0, delta=0.05)
        self.assertGreater(abs(overlap.value), abs(overlap.value_double_cut))

    def test_zero_asymmetry(self):
        params = self.params.with_delta_omega_sq(0.0)
        boundary = boundary_zero_order(self.zo, params)
        overlap = regularized_phi_phi(boundary.phi_plus, boundary.phi_minus, params,
                                      self.zo.xi, self.zo.r0)
        self.assertEqual(overlap.value, 0.0)

    def test_cut_beyond_radius(self):
        boundary = boundary_zero_order(self.zo, self.params)
        with self.assertRaises(PhysicalDomainError):
            regularized_phi_phi(boundary.phi_plus, boundary.phi_minus, self.params,
                                self.zo.r0, self.zo.r0)

    def test_grid_too_short(self):
        boundary = boundary_zero_order(self.zo, self.params, xi=1e-2 * self.zo.r0)
        with self.assertRaises(ValueError):
            regularized_phi_phi(boundary.phi_plus, boundary.phi_minus, self.params,
                                1e-3 * self.zo.r0, self.zo.r0)

    def test_q1_numeric_closed_form(self):
        ratio = 1e-3
        numeric = q1_numeric(self.zo, self.params, xi=ratio * self.zo.r0)
        n = self.zo.n_total
        expected = -2.4 * self.v * n / math.sqrt(self.zo.n_plus * self.zo.n_minus) \
            * artanh_integral(1 - ratio, 4)
        self.assertAlmostEqual(numeric / expected, 1.0, delta=0.01)

    def test_q1_log_slope_matches_analytic(self):
        r0 = self.zo.r0
        wide = q1_numeric(self.zo, self.params, xi=2e-3 * r0)
        narrow = q1_numeric(self.zo, self.params, xi=1e-3 * r0)
        analytic_wide = q1_amplitude(self.zo, self.params, xi=2e-3 * r0)
        analytic_narrow = q1_amplitude(self.zo, self.params, xi=1e-3 * r0)
        self.assertAlmostEqual((wide - narrow) / (analytic_wide - analytic_narrow), 1.0,
                               delta=0.1)


class CorrectedGeneratorTests(SimpleTestCase):

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.params = tf_params(0.01)
        cls.zo = stationary_zero_order(cls.params, 0.7, delta_b=0.3)
        boundary = boundary_zero_order(cls.zo, cls.params, n_points=513)
        cls.corrections = solve_first_order_phi(
            cls.zo, solve_first_order_psi(boundary, cls.params), cls.params
        )

    def test_products_match_fields(self):
        modes = corrected_modes(self.zo, self.corrections, 0.37)
        direct = modes.field("psi_plus").conj() * modes.field("phi_minus")
        np.testing.assert_allclose(modes.product("psi_plus", "phi_minus").values,
                                   direct.values, rtol=1e-10, atol=1e-14)

    def test_normalization_stays_zero_order(self):
        modes = corrected_modes(self.zo, self.corrections, 0.2)
        self.assertEqual(modes.gamma_plus, self.zo.gamma_plus)
        self.assertEqual(modes.i_integral, self.zo.i_integral)
        self.assertEqual(modes.u_tilde, self.zo.u_tilde)

    def test_fourier_resummation_matches_direct_assembly(self):
        source = CorrectedGenerator(self.zo, self.corrections, self.params)
        for t in (0.0, 0.11, 0.5):
            fast = source.instantaneous(t).f
            slow = GeneratorSource.instantaneous(source, t).f
            np.testing.assert_allclose(fast, slow, rtol=1e-9, atol=1e-9 * np.abs(slow).max())

    def test_relative_block_moves_with_asymmetry(self):
        f = CorrectedGenerator(self.zo, self.corrections, self.params)(0.1).f
        self.assertNotEqual(f[Q_REL, P_REL], 0.0)


class SecularGrowthTests(SimpleTestCase):

    def test_symmetric_trap_has_no_growth(self):
        report = secular_growth_check(tf_params(0.0), n_periods=4, n_points=257)
        self.assertEqual(report.slope, 0.0)
        self.assertTrue(report.ok)
        self.assertEqual(report.q2_rate, 0.0)

    def test_fit_recovers_slope(self):
        lam = 3.0
        times = np.linspace(0.0, 10.0, 801)
        values = 0.2 + 0.05 * times + 0.7 * np.sin(2 * lam * times + 0.4) \
            + 0.1 * np.cos(4 * lam * times)
        slope, rms = fit_secular_slope(times, values, lam)
        self.assertAlmostEqual(slope, 0.05, places=10)
        self.assertLess(rms, 1e-10)

    def test_first_order_oscillation(self):
        params = tf_params(0.002)
        report = secular_growth_check(params, n_periods=8, n_points=513)
        zo = stationary_zero_order(params, 0.7)
        lam = params.lambda_coupling
        times, q_rel = report.times, report.q_rel
        amplitude, coefficients = fit_oscillation(times, q_rel, lam)
        expected = abs(q1_numeric(zo, params, n_points=513))
        self.assertAlmostEqual(amplitude / expected, 1.0, delta=0.1)
        detrended = q_rel - coefficients[0] - coefficients[1] * times
        omega = dominant_frequency(times, detrended)
        self.assertLessEqual(abs(omega - 2 * lam), frequency_resolution(times))
        self.assertEqual(len(report.summary()), 10)

    def test_oscillation_matches_closed_form(self):
        params = tf_params(0.002)
        zo = stationary_zero_order(params, 0.7)
        xi = 1e-3 * zo.r0
        report = secular_growth_check(params, n_periods=8, xi=xi)
        amplitude, _ = fit_oscillation(report.times, report.q_rel, params.lambda_coupling)
        expected = q1_closed_form(zo, params, xi)
        self.assertLess(expected, 0.0)
        self.assertAlmostEqual(amplitude / abs(expected), 1.0, delta=0.1)

    def test_slope_matches_closed_form(self):
        params = tf_params(0.002)
        zo = stationary_zero_order(params, 0.7)
        xi = 1e-3 * zo.r0
        report = secular_growth_check(params, xi=xi)
        self.assertAlmostEqual(report.closed_form_rate / q2_closed_form(zo, params, xi), 1.0,
                               places=12)
        self.assertLess(report.slope, 0.0)
        self.assertAlmostEqual(report.closed_form_ratio, 1.0, delta=0.15)
        self.assertEqual(report.summary()["closed_form_ratio"], report.closed_form_ratio)
        self.assertEqual(report.summary()["ratio"], report.slope / report.q2_rate)

    def test_slope_scales_with_v_squared(self):
        slopes = []
        for delta_omega_sq in (0.001, 0.002):
            params = tf_params(delta_omega_sq)
            xi = 1e-3 * stationary_zero_order(params, 0.7).r0
            slopes.append(secular_growth_check(params, n_periods=12, xi=xi).slope)
        self.assertAlmostEqual(slopes[1] / slopes[0] / 4.0, 1.0, delta=0.15)

    def test_cycle_averaged_slope_matches_instantaneous(self):
        params = tf_params(0.002)
        xi = 1e-3 * stationary_zero_order(params, 0.7).r0
        instantaneous = secular_growth_check(params, n_periods=8, xi=xi)
        averaged = secular_growth_check(params, n_periods=8, xi=xi, coefficient_mode=AVERAGED)
        self.assertAlmostEqual(averaged.slope / instantaneous.slope, 1.0, delta=0.05)


class CorrelationDecayTests(SimpleTestCase):

    def test_first_order_decay_repeats_each_period(self):
        params = tf_params(0.001)
        period = math.pi / params.lambda_coupling
        times = np.linspace(0.0, 4 * period, 4 * SAMPLES_PER_PERIOD + 1)
        start = initial_moments(var_p_rel=50.0, hbar=params.hbar)
        trajectory = propagate_moments(start, corrected_source(params), times)
        decay = correlation_decay(trajectory, params.hbar)
        self.assertGreater(np.ptp(decay), 0.01)
        shift = SAMPLES_PER_PERIOD
        np.testing.assert_allclose(decay[shift:], decay[:-shift], rtol=0.0, atol=1e-3)

    def test_decay_time_follows_secular_slope(self):
        # the carrier part of Q_rel vanishes at whole periods
        params = tf_params(0.002)
        n_periods = 8
        report = secular_growth_check(params, n_periods=n_periods, n_points=513)
        times = report.times
        var_p_rel = (1.5 / (abs(report.slope) * times[-1])) ** 2
        start = initial_moments(var_p_rel=var_p_rel, var_q_rel=0.0, hbar=params.hbar)
        trajectory = propagate_moments(start, corrected_source(params), times)
        decay = correlation_decay(trajectory, params.hbar)
        once_per_period = slice(None, None, SAMPLES_PER_PERIOD)
        tau = fit_gaussian_decay(times[once_per_period], decay[once_per_period])
        expected = params.hbar / (abs(report.slope) * math.sqrt(var_p_rel))
        self.assertAlmostEqual(tau / expected, 1.0, delta=0.02)
