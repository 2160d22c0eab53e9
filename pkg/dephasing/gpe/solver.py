# gpe/solver.py
"""
Coupled Gross-Pitaevskii equations on a radial grid.

Every step is a Strang splitting K/2 D/2 C D/2 K/2: K the kinetic
propagator on u = r psi, D the diagonal trap and mean-field phase, C the
exact 2x2 mixing of the two components. In the A/B basis C is the
-hbar lambda coupling; in the +/- basis it is the trap difference
dV e^{-/+ 2 i lambda t}, evaluated at mid-step.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from core.exceptions import ConvergenceError, InstabilityError
from core.grid import RadialField, RadialGrid, integrate_radial
from hydro.thomas_fermi import stationary_radius, tf_density

from .fields import AB, PLUS_MINUS, CoupledField, as_ab, transform_basis
from .kinetic import SCHEMES, SPLIT_STEP, kinetic_operator

logger = logging.getLogger(__name__)

# outer radius, in oscillator lengths, when the Thomas-Fermi radius is smaller
IDEAL_GAS_R_MAX = 8.0
NORM_CHECK_INTERVAL = 1000
PHASE_PER_STEP_WARNING = 0.1


@dataclass(frozen=True)
class SolverConfig:
    """
    Numerical settings of a mean-field run.

    Unset fields are read from settings.DEPHASING when the config is built.

    Attributes:
        dt (float): Real-time step, > 0.
        scheme (str): "split-step" (sine-transform kinetic step) or
            "implicit" (Crank-Nicolson on the three-point Laplacian).
        n_points (int): Radial nodes, odd.
        r_max (float): Hard-wall radius; None picks R_MAX_FACTOR times the
            Thomas-Fermi radius, at least IDEAL_GAS_R_MAX.
        imaginary_dt (float): Imaginary-time step of `ground_state`.
        tolerance (float): Relative energy change per iteration at which the
            ground state counts as converged.
        max_iterations (int): Imaginary-time iteration limit.
        norm_drift (float): Allowed relative norm drift per 1000 steps.
    """

    dt: float
    scheme: str = SPLIT_STEP
    n_points: int | None = None
    r_max: float | None = None
    imaginary_dt: float = 5e-3
    tolerance: float | None = None
    max_iterations: int | None = None
    norm_drift: float | None = None

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt}.")
        if not self.imaginary_dt > 0:
            raise ValueError(f"imaginary_dt must be positive, got {self.imaginary_dt}.")
        if self.scheme not in SCHEMES:
            raise ValueError(f"Unknown scheme {self.scheme!r}; expected one of {SCHEMES}.")
        defaults = {
            "n_points": settings.DEPHASING["GRID_POINTS"],
            "tolerance": settings.DEPHASING["GROUND_STATE_TOLERANCE"],
            "max_iterations": settings.DEPHASING["GROUND_STATE_MAX_ITERATIONS"],
            "norm_drift": settings.DEPHASING["NORM_DRIFT_PER_1000"],
        }
        for name, value in defaults.items():
            if getattr(self, name) is None:
                object.__setattr__(self, name, value)


@dataclass(frozen=True)
class ObservableRecord:
    """
    Mean-field observables of one state.

    n_first and n_second are the atom numbers of the state's own components;
    cross_corr is always the A/B correlation, the integral of N conj(psi_A) psi_B.
    energy is per atom.
    """

    time: float
    n_first: float
    n_second: float
    cross_corr: complex
    energy: float


@dataclass(frozen=True, eq=False)
class GPETrajectory:
    basis: str
    times: np.ndarray
    n_first: np.ndarray
    n_second: np.ndarray
    cross_corr: np.ndarray
    energy: np.ndarray

    @classmethod
    def from_records(cls, basis, records):
        return cls(
            basis,
            np.array([r.time for r in records]),
            np.array([r.n_first for r in records]),
            np.array([r.n_second for r in records]),
            np.array([r.cross_corr for r in records], dtype=complex),
            np.array([r.energy for r in records]),
        )

    @property
    def relative_phase(self):
        """Unwrapped arg of the cross-correlation."""
        return np.unwrap(np.angle(self.cross_corr))

    def as_rows(self):
        """Rows (t, n_first, n_second, Re cross_corr, Im cross_corr, energy)."""
        return np.column_stack([
            self.times, self.n_first, self.n_second,
            self.cross_corr.real, self.cross_corr.imag, self.energy,
        ])


@dataclass(frozen=True, eq=False)
class EvolutionResult:
    state: CoupledField
    trajectory: GPETrajectory


def make_grid(params, config):
    """Trapezoid-rule grid on [0, r_max] for `config`."""
    r_max = config.r_max
    if r_max is None:
        r_max = IDEAL_GAS_R_MAX
        if params.u0 * params.n_total > 0:
            r0 = stationary_radius(params)
            r_max = max(settings.DEPHASING["R_MAX_FACTOR"] * r0, IDEAL_GAS_R_MAX)
    return RadialGrid.trapezoid(r_max, config.n_points)


def _density(first, second, n_total):
    return n_total * (np.abs(first) ** 2 + np.abs(second) ** 2)


def _potentials(grid, params, basis):
    r = grid.nodes
    if basis == AB:
        return params.potential_a(r), params.potential_b(r)
    mean = params.potential_mean(r)
    return mean, mean


def _diagonal(first, second, potentials, params, dt, imaginary):
    rho = _density(first, second, params.n_total)
    out = []
    for values, potential in zip((first, second), potentials):
        exponent = -(potential + params.u0 * rho) * dt / params.hbar
        out.append(values * (np.exp(exponent) if imaginary else np.exp(1j * exponent)))
    return out


def _split_step(first, second, kinetic, potentials, params, dt, mix, imaginary=False):
    first = kinetic.propagate(first, dt / 2, imaginary)
    second = kinetic.propagate(second, dt / 2, imaginary)
    first, second = _diagonal(first, second, potentials, params, dt / 2, imaginary)
    first, second = mix(first, second)
    first, second = _diagonal(first, second, potentials, params, dt / 2, imaginary)
    first = kinetic.propagate(first, dt / 2, imaginary)
    second = kinetic.propagate(second, dt / 2, imaginary)
    return first, second


def _kinetic(grid, params, scheme):
    return kinetic_operator(grid, scheme, params.mass, params.hbar)


def step_ab(state, params, config):
    """
    One step of the A/B equations

        i hbar d psi_A/dt = [L_A + u0 rho] psi_A - hbar lambda psi_B

    and the B counterpart.

    Raises:
        ValueError: If the state is in the +/- basis.
    """
    if state.basis != AB:
        raise ValueError("step_ab needs a state in the A/B basis.")
    angle = params.lambda_coupling * config.dt
    cos, isin = math.cos(angle), 1j * math.sin(angle)

    def mix(a, b):
        return cos * a + isin * b, isin * a + cos * b

    first, second = _split_step(
        state.first.values, state.second.values,
        _kinetic(state.grid, params, config.scheme),
        _potentials(state.grid, params, AB), params, config.dt, mix,
    )
    return state.with_values(first, second, state.time + config.dt)


def step_pm(state, params, config):
    """
    One step of the +/- equations

        i hbar d psi_+/dt = [L + u0 rho] psi_+ + dV e^{-2 i lambda t} psi_-

    and the - counterpart with the conjugate coupling. The mixing
    exp(-i dV dt sigma / hbar) is exact at each radius with t at mid-step.
    """
    if state.basis != PLUS_MINUS:
        raise ValueError("step_pm needs a state in the +/- basis.")
    dt = config.dt
    theta = params.delta_v(state.grid.nodes) * dt / params.hbar
    cos, sin = np.cos(theta), np.sin(theta)
    carrier = np.exp(-2j * params.lambda_coupling * (state.time + dt / 2))

    def mix(plus, minus):
        return (cos * plus - 1j * sin * carrier * minus,
                -1j * sin * np.conj(carrier) * plus + cos * minus)

    first, second = _split_step(
        state.first.values, state.second.values,
        _kinetic(state.grid, params, config.scheme),
        _potentials(state.grid, params, PLUS_MINUS), params, dt, mix,
    )
    return state.with_values(first, second, state.time + dt)


def total_norm(state):
    """Integral of |first|^2 + |second|^2; 1 for a normalized state."""
    return integrate_radial(state.first.abs2() + state.second.abs2())


def energy_per_atom(state, params, scheme=SPLIT_STEP):
    """
    Mean-field energy per atom of the A/B fields,

        sum_X [T psi_X + (psi_X | V_X | psi_X)] - 2 hbar lambda Re(psi_A | psi_B)
        + (u0 N / 2) integral of (|psi_A|^2 + |psi_B|^2)^2.
    """
    ab = as_ab(state, params)
    kinetic = _kinetic(ab.grid, params, scheme)
    r = ab.grid.nodes
    a, b = ab.first.values, ab.second.values
    rho1 = np.abs(a) ** 2 + np.abs(b) ** 2
    trap = integrate_radial(RadialField(
        ab.grid, params.potential_a(r) * np.abs(a) ** 2 + params.potential_b(r) * np.abs(b) ** 2
    ))
    coupling = -2 * params.hbar * params.lambda_coupling * np.real(
        integrate_radial(ab.first.conj() * ab.second)
    )
    interaction = params.u0 * params.n_total / 2 * integrate_radial(RadialField(ab.grid, rho1 ** 2))
    return float(kinetic.energy(a) + kinetic.energy(b) + trap + coupling + interaction)


def chemical_potential(state, params, scheme=SPLIT_STEP):
    """mu = d(N E)/dN: the energy per atom plus the interaction energy per atom."""
    ab = as_ab(state, params)
    rho1 = (ab.first.abs2() + ab.second.abs2()).values.real
    interaction = params.u0 * params.n_total / 2 * integrate_radial(RadialField(ab.grid, rho1 ** 2))
    return energy_per_atom(ab, params, scheme) + interaction


def observables(state, params, config=None):
    """
    Atom numbers, A/B cross-correlation and energy of `state`.

    Returns:
        ObservableRecord: n_first + n_second = N for a normalized state,
        |cross_corr| <= sqrt(N_A N_B).
    """
    scheme = config.scheme if config is not None else SPLIT_STEP
    n_total = params.n_total
    ab = as_ab(state, params)
    return ObservableRecord(
        time=state.time,
        n_first=n_total * integrate_radial(state.first.abs2()),
        n_second=n_total * integrate_radial(state.second.abs2()),
        cross_corr=complex(n_total * integrate_radial(ab.first.conj() * ab.second)),
        energy=energy_per_atom(ab, params, scheme),
    )


def _initial_guess(grid, params):
    r = grid.nodes
    if params.u0 * params.n_total > 0:
        r0 = stationary_radius(params)
        shape = np.sqrt(tf_density(r, r0, params.n_total) / params.n_total)
    else:
        shape = math.pi ** -0.75 * np.exp(-r ** 2 / 2)
    return shape / math.sqrt(integrate_radial(RadialField(grid, shape ** 2)))


def _norm_of(grid, values):
    return integrate_radial(RadialField(grid, np.abs(values) ** 2))


def ground_state(params, basis=AB, config=None, population_fraction=0.5, callback=None):
    """
    Lowest-energy state by imaginary-time propagation.

    With lambda > 0 the total norm is restored after every iteration and
    the populations settle by themselves. With lambda = 0 each component
    keeps the fraction it started with, so `population_fraction` = 1 gives
    the single-component ground state in A.

    Args:
        params (PhysicalParams): The system.
        basis (str): Basis of the returned state.
        config (SolverConfig): Grid, imaginary_dt, tolerance, max_iterations.
        population_fraction (float): Share of atoms in A for the initial guess.
        callback (callable): Called as callback(iteration, energy).

    Returns:
        CoupledField: Normalized state at time 0.

    Raises:
        ConvergenceError: If the relative energy change stays above
            `tolerance` for `max_iterations` iterations.
    """
    if not 0.0 <= population_fraction <= 1.0:
        raise ValueError("population_fraction must lie in [0, 1].")
    config = config or SolverConfig(dt=settings.DEPHASING["GPE_TIME_STEP"])
    grid = make_grid(params, config)
    kinetic = _kinetic(grid, params, config.scheme)
    potentials = _potentials(grid, params, AB)
    shape = _initial_guess(grid, params)
    first = math.sqrt(population_fraction) * shape.astype(complex)
    second = math.sqrt(1.0 - population_fraction) * shape.astype(complex)
    targets = (population_fraction, 1.0 - population_fraction)

    angle = params.lambda_coupling * config.imaginary_dt
    cosh, sinh = math.cosh(angle), math.sinh(angle)

    def mix(a, b):
        return cosh * a + sinh * b, sinh * a + cosh * b

    def normalize(a, b):
        if params.lambda_coupling > 0:
            scale = 1.0 / math.sqrt(_norm_of(grid, a) + _norm_of(grid, b))
            return a * scale, b * scale
        out = []
        for values, target in zip((a, b), targets):
            norm = _norm_of(grid, values)
            out.append(values * math.sqrt(target / norm) if norm > 0 else values)
        return out

    state = CoupledField(RadialField(grid, first), RadialField(grid, second), AB)
    energy = energy_per_atom(state, params, config.scheme)
    change = math.inf
    for iteration in range(1, config.max_iterations + 1):
        first, second = _split_step(
            first, second, kinetic, potentials, params, config.imaginary_dt, mix, imaginary=True,
        )
        first, second = normalize(first, second)
        state = state.with_values(first, second)
        previous, energy = energy, energy_per_atom(state, params, config.scheme)
        if callback is not None:
            callback(iteration, energy)
        change = abs(energy - previous) / max(abs(energy), 1e-300)
        if change < config.tolerance:
            logger.info("ground state: converged after %d iterations, E/N = %.12g",
                        iteration, energy)
            return transform_basis(state, params) if basis == PLUS_MINUS else state
    raise ConvergenceError(
        f"Imaginary-time iteration did not converge in {config.max_iterations} iterations.",
        {"iterations": config.max_iterations, "energy": energy, "relative_change": change},
    )


def max_phase_per_step(state, params, config):
    """Largest phase (V + u0 rho) dt / hbar acquired in one step."""
    r = state.grid.nodes
    rho = _density(state.first.values, state.second.values, params.n_total)
    potential = np.maximum(params.potential_a(r), params.potential_b(r))
    return float(np.max(potential + params.u0 * rho) * config.dt / params.hbar)


def check_time_step(state, params, config):
    """
    Validates dt against the largest diagonal energy.

    Raises:
        ValueError: If a single step winds the phase by more than pi.
    """
    phase = max_phase_per_step(state, params, config)
    if phase > math.pi:
        raise ValueError(
            f"dt = {config.dt} winds the mean-field phase by {phase:.3g} rad per step; "
            "reduce dt."
        )
    if phase > PHASE_PER_STEP_WARNING:
        logger.warning("dt = %g gives %.3g rad of mean-field phase per step", config.dt, phase)
    return phase


def evolve(state, params, config, n_steps, record_every=1):
    """
    Real-time evolution with recorded observables.

    The stepper follows the state's basis. The norm is compared every
    1000 steps, and at the end, against the previous check.

    Args:
        state (CoupledField): Initial state.
        params (PhysicalParams): The system.
        config (SolverConfig): dt, scheme and norm_drift.
        n_steps (int): Number of steps, >= 1.
        record_every (int): Record observables every this many steps.

    Returns:
        EvolutionResult: Final state and the trajectory, including t0.

    Raises:
        InstabilityError: If the relative norm drift exceeds norm_drift per
            1000 steps.
    """
    if n_steps < 1 or record_every < 1:
        raise ValueError("n_steps and record_every must be positive.")
    stepper = step_ab if state.basis == AB else step_pm
    check_time_step(state, params, config)
    records = [observables(state, params, config)]
    reference, checked_at = total_norm(state), 0
    for step in range(1, n_steps + 1):
        state = stepper(state, params, config)
        if step % NORM_CHECK_INTERVAL == 0 or step == n_steps:
            norm = total_norm(state)
            drift = abs(norm - reference) / reference
            allowed = config.norm_drift * max(1.0, (step - checked_at) / NORM_CHECK_INTERVAL)
            if not drift <= allowed:
                raise InstabilityError(
                    f"Norm drifted by {drift:.3g} over {step - checked_at} steps; reduce dt.",
                    {"step": step, "drift": drift, "dt": config.dt},
                )
            reference, checked_at = norm, step
        if step % record_every == 0:
            records.append(observables(state, params, config))
    logger.debug("gpe: %d steps of %g in the %s basis", n_steps, config.dt, state.basis)
    return EvolutionResult(state, GPETrajectory.from_records(state.basis, records))


def normalized(state):
    """Copy of `state` rescaled so that `total_norm` is 1."""
    scale = 1.0 / math.sqrt(total_norm(state))
    return state.with_values(state.first.values * scale, state.second.values * scale)


def with_basis(state, basis, params):
    return state if state.basis == basis else transform_basis(state, params)