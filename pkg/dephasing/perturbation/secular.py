# perturbation/secular.py
"""
End-to-end check of the secular growth of <Q_rel>.

The moment flow is driven by the first-order corrected generator; the
linear-in-t part of <Q_rel> is separated from the 2 lambda and 4 lambda
oscillations by least squares and compared with the analytic rates.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import PhysicalDomainError
from core.grid import integrate_radial
from hydro.zero_order import stationary_zero_order
from moments.generator import (
    INSTANTANEOUS,
    OUTER,
    Q_REL,
    GeneratorMatrix,
    GeneratorSource,
    assemble_generator,
)
from moments.overlaps import OverlapIntegrals
from moments.propagation import initial_moments, propagate_moments

from .coefficients import perturbation_parameter, q2_closed_form, q2_rate
from .first_order import (
    boundary_zero_order,
    corrected_modes,
    product_components,
    solve_first_order_phi,
    solve_first_order_psi,
)

logger = logging.getLogger(__name__)

OVERLAP_PAIRS = {
    "phi_psi": ("phi_plus", "psi_minus"),
    "psi_phi": ("psi_plus", "phi_minus"),
    "psi_psi": ("psi_plus", "psi_minus"),
    "phi_phi": ("phi_plus", "phi_minus"),
}
SAMPLES_PER_PERIOD = 32
MAX_RESIDUAL_FRACTION = 0.2


class CorrectedGenerator(GeneratorSource):
    """
    Generator source for the first-order corrected mode functions.

    Every dV-weighted overlap is a trigonometric polynomial in 2 lambda t,
    so its Fourier coefficients are integrated once; `instantaneous`
    resums them instead of integrating at every call.
    """

    def __init__(self, zo, corrections, params, grouping=OUTER,
                 coefficient_mode=INSTANTANEOUS):
        super().__init__(lambda t: corrected_modes(zo, corrections, t), params,
                         grouping, coefficient_mode)
        self.zero_order = zo
        dv = params.delta_v(corrections.grid.nodes)
        self._coefficients = {
            name: {k: complex(integrate_radial(part * dv))
                   for k, part in product_components(corrections, bra, ket).items()}
            for name, (bra, ket) in OVERLAP_PAIRS.items()
        }

    def overlaps(self, t):
        phase = 2j * self.params.lambda_coupling * t
        values = {
            name: sum(c * np.exp(k * phase) for k, c in series.items()) * np.exp(-phase)
            for name, series in self._coefficients.items()
        }
        zo = self.zero_order
        return OverlapIntegrals(
            gamma_plus=zo.gamma_plus,
            gamma_minus=zo.gamma_minus,
            i_integral=zo.i_integral,
            u_tilde=zo.u_tilde,
            **values,
        )

    def instantaneous(self, t):
        return GeneratorMatrix.from_overlaps(self.overlaps(t), self.params, self.grouping)


@dataclass(frozen=True, eq=False)
class SecularGrowthReport:
    """
    Fit of <Q_rel>(t) = c0 + slope t + oscillations for unit <P_rel(0)>.

    Attributes:
        slope (float): Linear growth per hbar P_rel^(0).
        q2_rate (float): Leading-log analytic rate.
        closed_form_rate (float): Analytic rate with the constants of the
            cut overlaps kept, the one the slope should match.
        residual_fraction (float): RMS fit residual over the secular rise
            slope * t_end.
        v (float): Perturbation parameter.
        xi (float): Healing length of the cut.
        excluded_fraction (float): Resonant volume left out of the solves.
        times (ndarray): Sample times.
        q_rel (ndarray): <Q_rel> samples.
    """

    slope: float
    q2_rate: float
    closed_form_rate: float
    residual_fraction: float
    v: float
    xi: float
    excluded_fraction: float
    times: np.ndarray
    q_rel: np.ndarray

    @property
    def ok(self):
        return self.residual_fraction <= MAX_RESIDUAL_FRACTION

    @property
    def ratio(self):
        return self.slope / self.q2_rate if self.q2_rate else math.nan

    @property
    def closed_form_ratio(self):
        return self.slope / self.closed_form_rate if self.closed_form_rate else math.nan

    def summary(self):
        return {
            "slope": self.slope,
            "q2_rate": self.q2_rate,
            "ratio": self.ratio,
            "closed_form_rate": self.closed_form_rate,
            "closed_form_ratio": self.closed_form_ratio,
            "residual_fraction": self.residual_fraction,
            "v": self.v,
            "xi": self.xi,
            "excluded_fraction": self.excluded_fraction,
            "ok": self.ok,
        }

    def as_rows(self):
        return np.column_stack([self.times, self.q_rel])


def _check_baseline(zo, params):
    """The symmetric-trap generator must leave the relative block at rest."""
    baseline = assemble_generator(zo, params.with_delta_omega_sq(0.0), 0.0).f
    scale = max(abs(params.n_total * zo.u_tilde), 1e-300)
    drift = float(np.max(np.abs(baseline[2:, 2:])))
    if drift > 1e-8 * scale:
        raise PhysicalDomainError(
            "The zero-order relative block does not vanish without dV.",
            {"relative_block": drift, "scale": scale},
        )


def fit_secular_slope(times, values, lambda_coupling):
    """
    Least-squares slope of values against t with the 2 lambda and 4 lambda
    harmonics removed.

    Returns:
        tuple[float, float]: (slope, rms residual).
    """
    times = np.asarray(times, dtype=float)
    columns = [np.ones_like(times), times]
    for harmonic in (2.0, 4.0):
        columns += [np.cos(harmonic * lambda_coupling * times),
                    np.sin(harmonic * lambda_coupling * times)]
    design = np.column_stack(columns)
    coefficients, *_ = np.linalg.lstsq(design, values, rcond=None)
    residual = values - design @ coefficients
    return float(coefficients[1]), float(np.sqrt(np.mean(residual ** 2)))


def secular_growth_check(params, population_fraction=0.7, delta_b=0.0, n_periods=20,
                         xi=None, n_points=None, grouping=OUTER,
                         coefficient_mode=INSTANTANEOUS):
    """
    Runs the corrected moment flow and fits the secular growth of <Q_rel>.

    Args:
        params (PhysicalParams): System parameters, lambda > 0.
        population_fraction (float): N_+ / N.
        delta_b (float): hbar times the initial phase offset dtheta0.
        n_periods (int): Length of the run in periods pi / lambda.
        xi (float, optional): Cut length, the healing length by default.
        n_points (int, optional): Boundary grid size.
        grouping (str): Generator grouping.
        coefficient_mode (str): "instantaneous" or "averaged".

    Returns:
        SecularGrowthReport: Slope per hbar P_rel^(0) with the analytic rate.
        `ok` is False when the residual exceeds 20% of the secular rise.

    Raises:
        PhysicalDomainError: If the symmetric baseline fails or lambda = 0.
        ResonanceError: From the first-order solves.
    """
    if not params.lambda_coupling > 0:
        raise PhysicalDomainError("The secular growth check needs lambda > 0.")
    zo = stationary_zero_order(params, population_fraction, delta_b)
    _check_baseline(zo, params)

    boundary = boundary_zero_order(zo, params, xi=xi, n_points=n_points)
    corrections = solve_first_order_phi(zo, solve_first_order_psi(boundary, params), params)
    source = CorrectedGenerator(zo, corrections, params, grouping, coefficient_mode)

    period = math.pi / params.lambda_coupling
    times = np.linspace(0.0, n_periods * period, n_periods * SAMPLES_PER_PERIOD + 1)
    start = initial_moments(mean=(0.0, 0.0, 1.0, 0.0), var_p_rel=0.0, var_q_rel=0.0,
                            hbar=params.hbar)
    trajectory = propagate_moments(start, source, times)
    q_rel = trajectory.means[:, Q_REL] / params.hbar

    slope, rms = fit_secular_slope(times, q_rel, params.lambda_coupling)
    rise = abs(slope) * times[-1]
    if rise > 0:
        residual_fraction = rms / rise
    else:
        residual_fraction = 0.0 if rms == 0 else math.inf
    report = SecularGrowthReport(
        slope=slope,
        q2_rate=q2_rate(zo, params, boundary.xi),
        closed_form_rate=q2_closed_form(zo, params, boundary.xi),
        residual_fraction=residual_fraction,
        v=perturbation_parameter(params, zo.r0),
        xi=boundary.xi,
        excluded_fraction=corrections.excluded_fraction,
        times=times,
        q_rel=q_rel,
    )
    if not report.ok:
        logger.warning("secular fit residual %.3g of the secular rise", residual_fraction)
    logger.info("secular growth: slope %.6g, closed form %.6g, q2 rate %.6g",
                slope, report.closed_form_rate, report.q2_rate)
    return report
