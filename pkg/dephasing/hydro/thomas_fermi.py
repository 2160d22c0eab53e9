# hydro/thomas_fermi.py
"""
Thomas-Fermi profile of the condensates and the breathing of its radius.

In the Thomas-Fermi limit both condensates share the inverted parabola

    rho(r) = 15 N / (8 pi r0^3) (1 - r^2 / r0^2),   r < r0,

whose radius follows r0'' + omega^2 r0 - 15 N u0 / (4 pi m r0^4) = 0. The
phase of the +/- fields is (A(t) r^2 + B(t)) / hbar with A = -m r0' / (2 r0)
and B' = 15 N u0 / (8 pi r0^3).
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings
from scipy import integrate

from core.exceptions import CollapseError, PhysicalDomainError
from core.integrators import integrate_ode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TFState:
    """
    Radius of the Thomas-Fermi ball and its rate of change.

    Attributes:
        r0 (float): Radius, > 0.
        r0_dot (float): dr0/dt.
    """

    r0: float
    r0_dot: float = 0.0

    def __post_init__(self):
        if not self.r0 > 0:
            raise PhysicalDomainError(f"r0 must be positive, got {self.r0}.")


@dataclass(frozen=True, eq=False)
class RadiusTrajectory:
    times: np.ndarray
    r0: np.ndarray
    r0_dot: np.ndarray

    def states(self):
        return [TFState(float(r), float(v)) for r, v in zip(self.r0, self.r0_dot)]

    def as_rows(self):
        return np.column_stack([self.times, self.r0, self.r0_dot])


@dataclass(frozen=True, eq=False)
class HydroPhases:
    """
    Coefficients of the phase (A r^2 + B_pm) / hbar.

    Entries are floats for a single instant or arrays along a trajectory.

    Attributes:
        a_coeff: A(t), quadratic phase coefficient.
        b_plus: B_+(t).
        b_minus: B_-(t).
        times: Sample times, None for a single instant.
    """

    a_coeff: object = 0.0
    b_plus: object = 0.0
    b_minus: object = 0.0
    times: object = None

    def at(self, index):
        """Single-instant phases at sample `index` of a trajectory."""
        return HydroPhases(
            float(np.asarray(self.a_coeff)[index]),
            float(np.asarray(self.b_plus)[index]),
            float(np.asarray(self.b_minus)[index]),
        )

    def delta_theta0(self, hbar=1.0):
        """(B_+ - B_-) / hbar; constant in time since both B grow at the same rate."""
        return (np.asarray(self.b_plus) - np.asarray(self.b_minus)) / hbar


def tf_density(r, r0, n_total):
    """
    Thomas-Fermi density 15 N / (8 pi r0^3) (1 - r^2 / r0^2), zero for r >= r0.

    Args:
        r (float or ndarray): Radii.
        r0 (float): Thomas-Fermi radius, > 0.
        n_total (float): Atom number carried by the profile.

    Returns:
        float or ndarray: Density at `r`.
    """
    if not r0 > 0:
        raise PhysicalDomainError(f"r0 must be positive, got {r0}.")
    r = np.asarray(r, dtype=float)
    peak = 15.0 * n_total / (8.0 * math.pi * r0 ** 3)
    rho = np.where(r < r0, peak * (1.0 - (r / r0) ** 2), 0.0)
    return rho if rho.ndim else float(rho)


def _pressure_constant(params):
    # 15 N u0 / (4 pi m)
    return 15.0 * params.n_total * params.u0 / (4.0 * math.pi * params.mass)


def stationary_radius(params):
    """
    Radius at which the r0 equation of motion is at rest.

    Returns:
        float: (15 N u0 / (4 pi m omega^2))^(1/5).

    Raises:
        PhysicalDomainError: If N u0 <= 0 (no Thomas-Fermi regime).
    """
    if params.n_total * params.u0 <= 0:
        raise PhysicalDomainError(
            "The Thomas-Fermi radius needs a repulsive interaction (u0 > 0).",
            {"u0": params.u0},
        )
    return (_pressure_constant(params) / params.omega_mean_sq) ** 0.2


def chemical_potential_tf(params, r0=None):
    """Thomas-Fermi chemical potential m omega^2 r0^2 / 2."""
    if r0 is None:
        r0 = stationary_radius(params)
    return 0.5 * params.mass * params.omega_mean_sq * r0 ** 2


def single_condensate_diffusion_time(params):
    """
    Phase-diffusion time hbar / (sqrt(N) dmu/dN) of one Thomas-Fermi condensate.

    mu scales as N^(2/5), so dmu/dN = 2 mu / (5 N). The value is an order of
    magnitude only and is reported next to the two-condensate results.
    """
    mu = chemical_potential_tf(params)
    dmu_dn = 0.4 * mu / params.n_total
    return params.hbar / (math.sqrt(params.n_total) * dmu_dn)


def healing_length(params, r0):
    """
    Healing length xi = (2 m^2 omega^2 r0 / hbar^2)^(-1/3) at the edge of the ball.

    Args:
        params (PhysicalParams): Supplies m, omega and hbar.
        r0 (float): Thomas-Fermi radius.
    """
    if not r0 > 0:
        raise PhysicalDomainError(f"r0 must be positive, got {r0}.")
    inverse_cube = 2.0 * params.mass ** 2 * params.omega_mean_sq * r0 / params.hbar ** 2
    return inverse_cube ** (-1.0 / 3.0)


def evolve_r0(tf0, params, times, omega_t=None, steps_per_period=None, floor_fraction=1e-6):
    """
    Integrates r0'' = -omega_t(t)^2 r0 + 15 N u0 / (4 pi m r0^4).

    Args:
        tf0 (TFState): Radius and velocity at times[0].
        params (PhysicalParams): Supplies N, u0, m and the default frequency.
        times (array_like): Strictly increasing output times.
        omega_t (callable, optional): Trap frequency as a function of time.
            Defaults to the constant mean frequency.
        steps_per_period (int, optional): Steps per breathing period.
            Defaults to settings.DEPHASING['STEPS_PER_PERIOD'].
        floor_fraction (float): r0 below floor_fraction * r0(0) is a collapse.

    Returns:
        RadiusTrajectory: r0 and r0' at every output time.

    Raises:
        CollapseError: If r0 falls below the floor or stops being finite.
    """
    if steps_per_period is None:
        steps_per_period = settings.DEPHASING["STEPS_PER_PERIOD"]
    if omega_t is None:
        omega_mean = params.omega_mean

        def omega_t(t):
            return omega_mean

    pressure = _pressure_constant(params)

    def rhs(t, y):
        r0, r0_dot = y
        return np.array([r0_dot, -omega_t(t) ** 2 * r0 + pressure / r0 ** 4])

    times = np.asarray(times, dtype=float)
    # the linearized breathing frequency bounds the time scale
    stiffness = 5.0 * (omega_t(times[0]) ** 2 + pressure / tf0.r0 ** 5)
    max_step = 2.0 * math.pi / (math.sqrt(stiffness) * max(int(steps_per_period), 200))
    samples = integrate_ode(rhs, np.array([tf0.r0, tf0.r0_dot]), times, max_step)

    floor = floor_fraction * tf0.r0
    radii = samples[:, 0]
    bad = ~np.isfinite(radii) | (radii < floor)
    if np.any(bad):
        index = int(np.argmax(bad))
        raise CollapseError(
            f"r0 fell below its floor {floor:g} at t = {times[index]:g}.",
            {"time": float(times[index]), "r0": float(radii[index]), "floor": floor},
        )
    logger.debug("r0: %d samples, range [%g, %g]", len(times), radii.min(), radii.max())
    return RadiusTrajectory(times, radii, samples[:, 1])


def phase_coefficients(trajectory, params, b_plus0=0.0, b_minus0=0.0):
    """
    Phase coefficients along a radius trajectory.

    A(t) = -m r0'/(2 r0) is evaluated pointwise; B_pm(t) accumulate
    B' = 15 N u0 / (8 pi r0^3) by the trapezoidal rule from B_pm(0).

    Args:
        trajectory (RadiusTrajectory): Output of `evolve_r0`.
        params (PhysicalParams): Supplies N, u0 and m.
        b_plus0 (float): B_+ at the first sample.
        b_minus0 (float): B_- at the first sample.

    Returns:
        HydroPhases: Arrays sampled at trajectory.times.
    """
    r0 = np.asarray(trajectory.r0, dtype=float)
    a_coeff = -params.mass * np.asarray(trajectory.r0_dot) / (2.0 * r0)
    b_rate = 15.0 * params.n_total * params.u0 / (8.0 * math.pi * r0 ** 3)
    accumulated = integrate.cumulative_trapezoid(b_rate, trajectory.times, initial=0.0)
    return HydroPhases(a_coeff, b_plus0 + accumulated, b_minus0 + accumulated, trajectory.times)


def stationary_trajectory(params, times):
    """Radius trajectory resting at the stationary radius."""
    times = np.asarray(times, dtype=float)
    r0 = stationary_radius(params)
    return RadiusTrajectory(times, np.full(times.shape, r0), np.zeros(times.shape))
