# oracle/two_mode.py
"""
Exact two-mode Bose model in the Fock basis |n_A = k, n_B = N - k>.

    H = -hbar lambda (a^dag b + b^dag a)
        + (u/2) n_A (n_A - 1) + (u/2) n_B (n_B - 1) + u_AB n_A n_B
        + delta_e (n_A - n_B) / 2

With u_AB = u the interaction is a c-number; `interaction_asymmetry`
u - u_AB switches on the relative-number nonlinearity chi n_rel^2 with
chi = (u - u_AB) / 4.
"""
import logging
import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy import linalg, stats

from core.exceptions import InvalidFieldError, PhysicalDomainError
from hydro.thomas_fermi import stationary_radius

logger = logging.getLogger(__name__)

MAX_ATOMS = 5000
NORM_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class FockVector:
    """
    Unit-norm state of N atoms in two modes.

    Attributes:
        amplitudes (ndarray): Complex c_k for k = n_A = 0..N.
    """

    amplitudes: np.ndarray

    def __post_init__(self):
        amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if amplitudes.ndim != 1 or len(amplitudes) < 2:
            raise InvalidFieldError("A Fock vector needs at least two amplitudes.")
        if not np.all(np.isfinite(amplitudes)):
            raise InvalidFieldError("Fock amplitudes must be finite.")
        norm = float(np.vdot(amplitudes, amplitudes).real)
        if abs(norm - 1.0) > NORM_TOLERANCE:
            raise InvalidFieldError(f"Fock vector norm is {norm!r}, expected 1.", {"norm": norm})
        object.__setattr__(self, "amplitudes", amplitudes)

    @classmethod
    def normalized(cls, amplitudes):
        amplitudes = np.asarray(amplitudes, dtype=complex)
        norm = math.sqrt(float(np.vdot(amplitudes, amplitudes).real))
        if norm == 0:
            raise InvalidFieldError("Cannot normalize a zero vector.")
        return cls(amplitudes / norm)

    @classmethod
    def fock(cls, n_atoms, n_a):
        amplitudes = np.zeros(n_atoms + 1, dtype=complex)
        amplitudes[n_a] = 1.0
        return cls(amplitudes)

    @property
    def n_atoms(self):
        return len(self.amplitudes) - 1

    @property
    def probabilities(self):
        return np.abs(self.amplitudes) ** 2


def _check_atoms(n_atoms):
    if int(n_atoms) != n_atoms or n_atoms < 1:
        raise PhysicalDomainError(f"n_atoms must be a positive integer, got {n_atoms}.")
    if n_atoms > MAX_ATOMS:
        raise PhysicalDomainError(
            f"n_atoms = {n_atoms} exceeds the dense limit {MAX_ATOMS}.",
            {"n_atoms": n_atoms},
        )
    return int(n_atoms)


@dataclass(frozen=True, eq=False)
class TwoModeHamiltonian:
    """
    Real symmetric tridiagonal two-mode Hamiltonian.

    Attributes:
        n_atoms (int): Total atom number N.
        lambda_coupling (float): Tunnelling rate; hopping energy hbar lambda.
        u_int (float): On-site interaction u = u_AA = u_BB.
        u_cross (float): Cross-mode interaction u_AB.
        delta_e (float): Mode energy asymmetry.
        hbar (float): Reduced Planck constant.
    """

    n_atoms: int
    lambda_coupling: float
    u_int: float
    u_cross: float
    delta_e: float = 0.0
    hbar: float = 1.0

    @property
    def chi(self):
        """Coefficient of n_rel^2 = (n_A - n_B)^2 in H."""
        return (self.u_int - self.u_cross) / 4.0

    @cached_property
    def diagonal(self):
        k = np.arange(self.n_atoms + 1, dtype=float)
        rest = self.n_atoms - k
        return (0.5 * self.u_int * (k * (k - 1) + rest * (rest - 1))
                + self.u_cross * k * rest
                + 0.5 * self.delta_e * (k - rest))

    @cached_property
    def off_diagonal(self):
        k = np.arange(self.n_atoms, dtype=float)
        return -self.hbar * self.lambda_coupling * np.sqrt((k + 1) * (self.n_atoms - k))

    def matrix(self):
        """Dense (N+1) x (N+1) matrix."""
        return (np.diag(self.diagonal)
                + np.diag(self.off_diagonal, 1)
                + np.diag(self.off_diagonal, -1))

    @cached_property
    def eigensystem(self):
        """(energies, eigenvectors as columns), energies ascending."""
        energies, vectors = linalg.eigh_tridiagonal(self.diagonal, self.off_diagonal)
        logger.debug("two-mode spectrum: N=%d E0=%.6g", self.n_atoms, energies[0])
        return energies, vectors

    def apply(self, amplitudes):
        """H acting on amplitude arrays whose last axis runs over k."""
        amplitudes = np.asarray(amplitudes)
        result = self.diagonal * amplitudes
        result[..., :-1] += self.off_diagonal * amplitudes[..., 1:]
        result[..., 1:] += self.off_diagonal * amplitudes[..., :-1]
        return result

    def energy(self, state):
        amplitudes = state.amplitudes if isinstance(state, FockVector) else state
        return float(np.vdot(amplitudes, self.apply(amplitudes)).real)


def build_hamiltonian(n_atoms, lambda_coupling, u_int, delta_e=0.0,
                      interaction_asymmetry=0.0, hbar=1.0):
    """
    Builds the two-mode Hamiltonian.

    Args:
        n_atoms (int): N <= 5000.
        lambda_coupling (float): Tunnelling rate.
        u_int (float): Interaction energy shared by u_AA, u_BB and u_AB.
        delta_e (float): Mode asymmetry.
        interaction_asymmetry (float): u_AA - u_AB; nonzero only for the
            collapse checks.
        hbar (float): Reduced Planck constant.

    Raises:
        PhysicalDomainError: If N is not a positive integer or exceeds 5000.
    """
    return TwoModeHamiltonian(
        n_atoms=_check_atoms(n_atoms),
        lambda_coupling=float(lambda_coupling),
        u_int=float(u_int),
        u_cross=float(u_int) - float(interaction_asymmetry),
        delta_e=float(delta_e),
        hbar=float(hbar),
    )


def coherent_state(n_atoms, population_fraction=0.5, phase=0.0):
    """
    Atomic coherent state (sqrt(p) a^dag + sqrt(1 - p) e^{-i phase} b^dag)^N |0>.

    `phase` is the relative phase Phi_A - Phi_B, so that
    arg <a^dag b> = -phase.
    """
    n_atoms = _check_atoms(n_atoms)
    if not 0.0 <= population_fraction <= 1.0:
        raise PhysicalDomainError(
            f"population_fraction must lie in [0, 1], got {population_fraction}."
        )
    k = np.arange(n_atoms + 1)
    weights = stats.binom.pmf(k, n_atoms, population_fraction)
    return FockVector.normalized(np.sqrt(weights) * np.exp(1j * phase * k))


def number_squeezed_state(n_atoms, width, phase=0.0, population_fraction=0.5):
    """
    Gaussian number distribution around n_A = pN with Var(n_A) ~ width^2.

    Var(n_rel) is 4 width^2 as long as the Gaussian fits inside 0..N.
    """
    n_atoms = _check_atoms(n_atoms)
    if not width > 0:
        raise PhysicalDomainError(f"width must be positive, got {width}.")
    k = np.arange(n_atoms + 1)
    centre = population_fraction * n_atoms
    envelope = np.exp(-((k - centre) ** 2) / (4.0 * width ** 2))
    return FockVector.normalized(envelope * np.exp(1j * phase * k))


@dataclass(frozen=True)
class TwoModeProjection:
    """Two-mode constants of a Thomas-Fermi condensate pair."""

    n_atoms: int
    lambda_coupling: float
    u_int: float
    delta_e: float
    r0: float

    def hamiltonian(self, interaction_asymmetry=0.0, hbar=1.0):
        return build_hamiltonian(self.n_atoms, self.lambda_coupling, self.u_int,
                                 self.delta_e, interaction_asymmetry, hbar)


def project_two_mode(params, r0=None, n_atoms=None):
    """
    Projects the mean-field model on the Thomas-Fermi mode.

    u = u0 int rho_1^2 = 15 u0 / (14 pi r0^3) and delta_e = 2 <dV>
    with <r^2> = 3 r0^2 / 7.

    Args:
        params (PhysicalParams): System parameters.
        r0 (float, optional): Thomas-Fermi radius; stationary by default.
        n_atoms (int, optional): Atom number of the Fock space; params.n_total
            rounded by default.
    """
    if r0 is None:
        r0 = stationary_radius(params)
    if not r0 > 0:
        raise PhysicalDomainError(f"r0 must be positive, got {r0}.")
    n_atoms = int(round(params.n_total)) if n_atoms is None else n_atoms
    projection = TwoModeProjection(
        n_atoms=_check_atoms(n_atoms),
        lambda_coupling=params.lambda_coupling,
        u_int=15.0 * params.u0 / (14.0 * math.pi * r0 ** 3),
        delta_e=2.0 * params.delta_v(math.sqrt(3.0 / 7.0) * r0),
        r0=r0,
    )
    logger.info("two-mode projection: u=%.6g delta_e=%.6g", projection.u_int, projection.delta_e)
    return projection
