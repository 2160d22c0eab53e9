# josephson/dynamics.py
"""
Classical two-mode model of two coupled condensates.

The pair (delta_n, delta_phi) obeys Hamilton equations generated by
C = 2 hbar lambda sqrt(N^2 - delta_n^2) cos(delta_phi):

    d(delta_n)/dt   =  dC/d(delta_phi) / hbar
    d(delta_phi)/dt = -dC/d(delta_n) / hbar

Both the fixed-step integrator and the closed-form solution live here.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from core.exceptions import PhysicalDomainError
from core.integrators import integrate_ode, josephson_step

logger = logging.getLogger(__name__)

# |delta_n| is clamped to N (1 - EDGE) before derivatives are taken.
EDGE = 1e-12


@dataclass(frozen=True)
class TwoModeState:
    """
    Population difference and relative phase of the two modes.

    Attributes:
        delta_n (float): N_A - N_B.
        delta_phi (float): Phi_A - Phi_B in radians, stored unwrapped.
    """

    delta_n: float
    delta_phi: float

    def wrapped_phase(self):
        """delta_phi reduced to (-pi, pi]."""
        return math.atan2(math.sin(self.delta_phi), math.cos(self.delta_phi))


@dataclass(frozen=True, eq=False)
class TwoModeTrajectory:
    times: np.ndarray
    delta_n: np.ndarray
    delta_phi: np.ndarray
    c_values: np.ndarray

    def __post_init__(self):
        lengths = {len(self.times), len(self.delta_n), len(self.delta_phi), len(self.c_values)}
        if len(lengths) != 1:
            raise ValueError("Trajectory columns must have equal lengths.")
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("Trajectory times must be strictly increasing.")

    def states(self):
        return [TwoModeState(float(n), float(p)) for n, p in zip(self.delta_n, self.delta_phi)]

    def as_rows(self):
        """Rows (t, delta_n, delta_phi, c_value) for CSV export."""
        return np.column_stack([self.times, self.delta_n, self.delta_phi, self.c_values])


def _check_population(delta_n, n_total):
    if abs(delta_n) > n_total * (1 + 1e-12):
        raise PhysicalDomainError(
            f"|delta_n| = {abs(delta_n)} exceeds the atom number {n_total}.",
            {"delta_n": delta_n, "n_total": n_total},
        )


def populations(state, n_total):
    """Returns (N_A, N_B) for a state of a condensate pair holding n_total atoms."""
    return (n_total + state.delta_n) / 2, (n_total - state.delta_n) / 2


def hamiltonian_c(state, params):
    """
    Conserved quantity C of the two-mode Hamilton equations.

    Args:
        state (TwoModeState): The (delta_n, delta_phi) pair.
        params (PhysicalParams): Supplies N, lambda and hbar.

    Returns:
        float: 2 hbar lambda sqrt(N^2 - delta_n^2) cos(delta_phi).

    Raises:
        PhysicalDomainError: If |delta_n| > N.
    """
    n_total = params.n_total
    _check_population(state.delta_n, n_total)
    root = math.sqrt(max(n_total ** 2 - state.delta_n ** 2, 0.0))
    return 2 * params.hbar * params.lambda_coupling * root * math.cos(state.delta_phi)


def _rhs(params):
    n_total = params.n_total
    rate = 2 * params.lambda_coupling
    limit = n_total * (1 - EDGE)

    def rhs(t, y):
        delta_n = np.clip(y[0], -limit, limit)
        root = np.sqrt(n_total ** 2 - delta_n ** 2)
        d_delta_n = -rate * root * np.sin(y[1])
        d_delta_phi = rate * delta_n * np.cos(y[1]) / root
        return np.array([d_delta_n, d_delta_phi])

    return rhs


def _c_of(params, delta_n, delta_phi):
    root = np.sqrt(np.clip(params.n_total ** 2 - delta_n ** 2, 0.0, None))
    return 2 * params.hbar * params.lambda_coupling * root * np.cos(delta_phi)


def evolve_many(states, params, times, steps_per_period=None):
    """
    Integrates several initial states at once with the same fixed steps.

    Args:
        states (Sequence[TwoModeState]): Initial conditions.
        params (PhysicalParams): Supplies N and lambda.
        times (array_like): Strictly increasing output times.
        steps_per_period (int, optional): Steps per Josephson period
            pi / lambda, at least 200. Defaults to
            settings.DEPHASING['STEPS_PER_PERIOD'].

    Returns:
        list[TwoModeTrajectory]: One trajectory per initial state.
    """
    if steps_per_period is None:
        steps_per_period = settings.DEPHASING["STEPS_PER_PERIOD"]
    steps_per_period = max(200, int(steps_per_period))
    for state in states:
        _check_population(state.delta_n, params.n_total)

    times = np.asarray(times, dtype=float)
    y0 = np.array([[s.delta_n for s in states], [s.delta_phi for s in states]], dtype=float)
    if params.lambda_coupling == 0:
        samples = np.broadcast_to(y0, (len(times),) + y0.shape).copy()
    else:
        max_step = josephson_step(params.lambda_coupling, steps_per_period)
        samples = integrate_ode(_rhs(params), y0, times, max_step)
    logger.debug("two-mode: %d states over %d output times", len(states), len(times))

    trajectories = []
    for k in range(len(states)):
        delta_n = samples[:, 0, k]
        delta_phi = samples[:, 1, k]
        trajectories.append(
            TwoModeTrajectory(times, delta_n, delta_phi, _c_of(params, delta_n, delta_phi))
        )
    return trajectories


def evolve_two_mode(state0, params, times, steps_per_period=None):
    """
    Integrates the Hamilton equations from `state0`.

    Uses fixed RK4 steps, at least 200 per Josephson period. With
    lambda = 0 the state does not move.

    Returns:
        TwoModeTrajectory: States and C at every requested time.
    """
    return evolve_many([state0], params, times, steps_per_period)[0]


def amplitude_A(state0, params):
    """
    Oscillation amplitude of delta_n, sqrt(N^2 - C^2 / (2 hbar lambda)^2).

    Raises:
        PhysicalDomainError: If lambda = 0 (no oscillation to describe).
    """
    if params.lambda_coupling <= 0:
        raise PhysicalDomainError("The closed form needs lambda > 0.")
    _check_population(state0.delta_n, params.n_total)
    # N^2 sin^2 + delta_n^2 cos^2 equals N^2 - (C / 2 hbar lambda)^2 without the cancellation
    sine, cosine = math.sin(state0.delta_phi), math.cos(state0.delta_phi)
    return math.sqrt((params.n_total * sine) ** 2 + (state0.delta_n * cosine) ** 2)


def initial_phase_offset(state0, params):
    """
    Phase Phi_N0 of delta_n(t) = A cos(2 lambda t + Phi_N0).

    The branch of arccos(delta_n(0) / A) is the one whose time derivative
    at t = 0 equals dC/d(delta_phi).
    """
    root = math.sqrt(max(params.n_total ** 2 - state0.delta_n ** 2, 0.0))
    return math.atan2(root * math.sin(state0.delta_phi), state0.delta_n)


def closed_form_delta_n(state0, params, t):
    """
    Population difference delta_n(t) = A cos(2 lambda t + Phi_N0).

    Args:
        state0 (TwoModeState): State at t = 0.
        params (PhysicalParams): Supplies N and lambda > 0.
        t (float or ndarray): Times.

    Returns:
        float or ndarray: delta_n at `t`; constant when A = 0.
    """
    amplitude = amplitude_A(state0, params)
    t = np.asarray(t, dtype=float)
    if amplitude == 0:
        result = np.full(t.shape, state0.delta_n)
    else:
        phase = initial_phase_offset(state0, params)
        result = amplitude * np.cos(2 * params.lambda_coupling * t + phase)
    return result if result.ndim else float(result)


def closed_form_phase(state0, params, t):
    """
    Relative phase delta_phi(t), continuous in t.

    Follows from sqrt(N^2 - delta_n^2) sin(delta_phi) = A sin(2 lambda t + Phi_N0)
    and sqrt(N^2 - delta_n^2) cos(delta_phi) = C / (2 hbar lambda), unwrapped so
    that delta_phi(0) is reproduced exactly.

    Raises:
        PhysicalDomainError: If C = 0; the phase then jumps and only the
            numeric integrator applies.
    """
    c_value = hamiltonian_c(state0, params)
    scale = 2 * params.hbar * params.lambda_coupling * params.n_total
    if abs(c_value) <= 1e-12 * scale:
        raise PhysicalDomainError(
            "C = 0 makes the closed-form phase singular; use evolve_two_mode instead."
        )
    amplitude = amplitude_A(state0, params)
    c_reduced = c_value / (2 * params.hbar * params.lambda_coupling)
    sign = 1.0 if c_reduced > 0 else -1.0
    offset = 0.0 if c_reduced > 0 else math.pi
    phase0 = initial_phase_offset(state0, params)

    def base(time):
        sine = amplitude * np.sin(2 * params.lambda_coupling * time + phase0)
        return np.arctan2(sign * sine, abs(c_reduced)) + offset

    turns = round((state0.delta_phi - float(base(0.0))) / (2 * math.pi))
    result = base(np.asarray(t, dtype=float)) + 2 * math.pi * turns
    return result if np.ndim(result) else float(result)
