# moments/generator.py
"""
Generator F(t) of the linear flow of (P_tot, Q_tot, P_rel, Q_rel).

    dP_tot/dt = 0
    dQ_tot/dt = N u~ P_tot
    dP_rel/dt = [Im(phi_+|psi_-)/gamma_+ - Im(psi_+|phi_-)/gamma_-] P_rel / hbar
                + Re(psi_+|psi_-) Q_rel / hbar^2
    dQ_rel/dt = g [N u~ - 2 N u0 I/(gamma_+ gamma_-) - Re(phi_+|phi_-)/(gamma_+ gamma_-)] P_rel
                + [Im(psi_+|phi_-)/gamma_- - Im(phi_+|psi_-)/gamma_+] Q_rel / hbar

with g = 1/(gamma_+ gamma_-) for the "outer" grouping and g = 1 for
"bracket_only". The total and relative blocks never couple.
"""
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy import fft

from core.exceptions import PhysicalDomainError
from core.integrators import josephson_step

from .overlaps import mode_overlaps

P_TOT, Q_TOT, P_REL, Q_REL = range(4)
OPERATORS = ("P_tot", "Q_tot", "P_rel", "Q_rel")

OUTER = "outer"
BRACKET_ONLY = "bracket_only"
GROUPINGS = (OUTER, BRACKET_ONLY)

INSTANTANEOUS = "instantaneous"
AVERAGED = "averaged"
COEFFICIENT_MODES = (INSTANTANEOUS, AVERAGED)

# harmonics of the 2 lambda carrier resolved over one period
AVERAGING_SAMPLES = 16
MIN_STEPS_PER_PERIOD = 200


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """
    Real 4x4 matrix F with d m/dt = F m for m = (P_tot, Q_tot, P_rel, Q_rel).

    Raises:
        ValueError: If F is not 4x4, if the P_tot row is nonzero or if the
            total and relative blocks couple.
    """

    f: np.ndarray

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        if f.shape != (4, 4):
            raise ValueError(f"Generator must be 4x4, got {f.shape}.")
        if np.any(f[P_TOT]):
            raise ValueError("The P_tot row must vanish.")
        if np.any(f[:2, 2:]) or np.any(f[2:, :2]):
            raise ValueError("Total and relative blocks must not couple.")
        f.setflags(write=False)
        object.__setattr__(self, "f", f)

    @classmethod
    def zero(cls):
        return cls(np.zeros((4, 4)))

    @classmethod
    def from_overlaps(cls, integrals, params, grouping=OUTER):
        """Fills F from `OverlapIntegrals` of one instant."""
        if grouping not in GROUPINGS:
            raise ValueError(f"Unknown grouping {grouping!r}; expected one of {GROUPINGS}.")
        g_plus, g_minus = integrals.gamma_plus, integrals.gamma_minus
        if g_plus <= 0 or g_minus <= 0:
            raise PhysicalDomainError(
                f"gamma_+ and gamma_- must be positive, got {g_plus:g} and {g_minus:g}."
            )
        hbar, n_total = params.hbar, params.n_total
        g_product = g_plus * g_minus
        bracket = (
            n_total * integrals.u_tilde
            - 2 * n_total * params.u0 * integrals.i_integral / g_product
            - integrals.phi_phi.real / g_product
        )
        damping = integrals.phi_psi.imag / g_plus - integrals.psi_phi.imag / g_minus

        f = np.zeros((4, 4))
        f[Q_TOT, P_TOT] = n_total * integrals.u_tilde
        f[P_REL, P_REL] = damping / hbar
        f[P_REL, Q_REL] = integrals.psi_psi.real / hbar ** 2
        f[Q_REL, P_REL] = bracket / g_product if grouping == OUTER else bracket
        f[Q_REL, Q_REL] = -damping / hbar
        return cls(f)

    def entry(self, row, column):
        return float(self.f[OPERATORS.index(row), OPERATORS.index(column)])


def assemble_generator(modes, params, t, grouping=OUTER):
    """
    F(t) from mode functions at time t.

    Args:
        modes: `ZeroOrderSolution` or `ModeFunctions` (or anything with the
            same interface).
        params (PhysicalParams): Supplies dV, lambda, N, u0 and hbar.
        t (float): Time of the dV e^{-2 i lambda t} carrier.
        grouping (str): "outer" or "bracket_only".

    Returns:
        GeneratorMatrix: The instantaneous generator.

    Raises:
        PhysicalDomainError: If gamma_+ or gamma_- is not positive.
    """
    return GeneratorMatrix.from_overlaps(mode_overlaps(modes, params, t), params, grouping)


class GeneratorSource:
    """
    Time-dependent generator for `propagate_moments`.

    `modes` is either fixed mode functions or a callable t -> mode
    functions. In "averaged" mode F(t) is the cycle average over the period
    pi/lambda centred on t, taken to second order in the oscillating part:

        F_avg = <F> + <F1 W>,    F1 = F - <F>,    W' = F1,  <W> = 0

    The second term is the drift left by products of two carrier oscillations.
    """

    def __init__(self, modes, params, grouping=OUTER, coefficient_mode=INSTANTANEOUS):
        if coefficient_mode not in COEFFICIENT_MODES:
            raise ValueError(
                f"Unknown coefficient mode {coefficient_mode!r}; "
                f"expected one of {COEFFICIENT_MODES}."
            )
        if coefficient_mode == AVERAGED and not params.lambda_coupling > 0:
            raise PhysicalDomainError("Cycle averaging needs lambda > 0.")
        self.modes = modes
        self.params = params
        self.grouping = grouping
        self.coefficient_mode = coefficient_mode

    def _modes_at(self, t):
        return self.modes(t) if callable(self.modes) else self.modes

    def instantaneous(self, t):
        return assemble_generator(self._modes_at(t), self.params, t, self.grouping)

    def __call__(self, t):
        if self.coefficient_mode == INSTANTANEOUS:
            return self.instantaneous(t)
        spectrum = self._period_spectrum(t)
        omega = 2 * self.params.lambda_coupling
        harmonics = fft.fftfreq(AVERAGING_SAMPLES, 1.0 / AVERAGING_SAMPLES)
        drift = np.zeros((4, 4), dtype=complex)
        for k, harmonic in enumerate(harmonics):
            if harmonic == 0 or abs(harmonic) == AVERAGING_SAMPLES // 2:
                continue
            drift += spectrum[k] @ spectrum[-k] / (-1j * harmonic * omega)
        return GeneratorMatrix(spectrum[0].real + drift.real)

    def _period_spectrum(self, t):
        """Fourier coefficients of F over the period centred on t, harmonic k at index k."""
        period = math.pi / self.params.lambda_coupling
        offsets = period * (np.arange(AVERAGING_SAMPLES) / AVERAGING_SAMPLES - 0.5)
        samples = np.array([self.instantaneous(t + offset).f for offset in offsets])
        return fft.fft(samples, axis=0) / AVERAGING_SAMPLES

    def max_step(self, steps_per_period=None):
        if steps_per_period is None:
            steps_per_period = settings.DEPHASING["STEPS_PER_PERIOD"]
        return josephson_step(self.params.lambda_coupling,
                              max(steps_per_period, MIN_STEPS_PER_PERIOD))
