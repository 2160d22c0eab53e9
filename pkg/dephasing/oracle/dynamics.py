# oracle/dynamics.py
import logging
import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import FitError
from moments.propagation import fit_gaussian_decay

from .two_mode import FockVector

logger = logging.getLogger(__name__)

# Samples at or below this fraction of the initial visibility end the collapse window.
COLLAPSE_FLOOR = 0.2


@dataclass(frozen=True, eq=False)
class ExactTrajectory:
    """
    Fock amplitudes at a sequence of times.

    Attributes:
        times (ndarray): Sample times, shape (T,).
        amplitudes (ndarray): Complex amplitudes, shape (T, N + 1).
    """

    times: np.ndarray
    amplitudes: np.ndarray

    @property
    def n_atoms(self):
        return self.amplitudes.shape[1] - 1

    @property
    def probabilities(self):
        return np.abs(self.amplitudes) ** 2

    def state(self, index):
        return FockVector(self.amplitudes[index])

    def norms(self):
        return self.probabilities.sum(axis=1)

    def mean_n_a(self):
        return self.probabilities @ np.arange(self.n_atoms + 1)

    def mean_delta_n(self):
        """<n_A - n_B>."""
        return self.probabilities @ (2.0 * np.arange(self.n_atoms + 1) - self.n_atoms)

    def var_delta_n(self):
        n_rel = 2.0 * np.arange(self.n_atoms + 1) - self.n_atoms
        mean = self.probabilities @ n_rel
        return self.probabilities @ n_rel ** 2 - mean ** 2

    def tunnelling_expectation(self):
        """<a^dag b> = sum_k conj(c_{k+1}) c_k sqrt((k+1)(N-k))."""
        k = np.arange(self.n_atoms)
        weights = np.sqrt((k + 1.0) * (self.n_atoms - k))
        return np.sum(np.conj(self.amplitudes[:, 1:]) * self.amplitudes[:, :-1] * weights, axis=1)

    def energies(self, hamiltonian):
        return np.real(np.sum(np.conj(self.amplitudes) * hamiltonian.apply(self.amplitudes),
                              axis=1))

    def as_rows(self):
        """Rows (t, <dN>, Var(dN), visibility) for CSV export."""
        return np.column_stack([self.times, self.mean_delta_n(), self.var_delta_n(),
                                visibility(self)])


def column_names():
    return ["t[1/omega_m]", "delta_n_mean[atoms]", "delta_n_var[atoms^2]",
            "visibility[1]"]


def evolve_exact(state0, hamiltonian, times):
    """
    Propagates state0 with exp(-i H t / hbar) through the eigenbasis of H.

    Args:
        state0 (FockVector): Unit-norm initial state with N matching H.
        hamiltonian (TwoModeHamiltonian): The Hamiltonian.
        times (array_like): Output times, any order and sign.

    Returns:
        ExactTrajectory: Amplitudes at every time.

    Raises:
        ValueError: If the atom numbers disagree or times are not finite.
    """
    if state0.n_atoms != hamiltonian.n_atoms:
        raise ValueError(
            f"State holds {state0.n_atoms} atoms, Hamiltonian {hamiltonian.n_atoms}."
        )
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if not np.all(np.isfinite(times)):
        raise ValueError("Evolution times must be finite.")
    energies, vectors = hamiltonian.eigensystem
    weights = vectors.T @ state0.amplitudes
    phases = np.exp(-1j * np.outer(times, energies) / hamiltonian.hbar)
    amplitudes = (phases * weights) @ vectors.T
    logger.debug("exact evolution: N=%d, %d samples", hamiltonian.n_atoms, len(times))
    return ExactTrajectory(times, amplitudes)


def visibility(trajectory):
    """|<a^dag b>| / (N/2), in [0, 1]."""
    return np.abs(trajectory.tunnelling_expectation()) / (trajectory.n_atoms / 2.0)


def coherence(trajectory):
    """|<a^dag b>| / sqrt(<n_A> <n_B>)."""
    n_a = trajectory.mean_n_a()
    n_b = trajectory.n_atoms - n_a
    return np.abs(trajectory.tunnelling_expectation()) / np.sqrt(n_a * n_b)


def revival_time(hamiltonian):
    """
    First full revival pi hbar / (4 |chi|) of |<a^dag b>| at lambda = 0.

    Returns inf when chi = 0: the visibility never collapses.
    """
    chi = hamiltonian.chi
    if chi == 0:
        return math.inf
    return math.pi * hamiltonian.hbar / (4.0 * abs(chi))


def collapse_time_estimate(hamiltonian, var_n_rel):
    """Gaussian collapse time hbar sqrt(2) / (4 |chi| sqrt(Var(n_rel))) at lambda = 0."""
    chi = hamiltonian.chi
    if chi == 0 or var_n_rel == 0:
        return math.inf
    return hamiltonian.hbar * math.sqrt(2.0) / (4.0 * abs(chi) * math.sqrt(var_n_rel))


def collapse_time(times, values):
    """
    t_c of the early-time collapse values ~ v0 exp(-t^2 / t_c^2).

    Only the leading samples down to 20% of the first value enter the fit.

    Raises:
        FitError: If fewer than three samples precede the floor.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(values) == 0 or not values[0] > 0:
        raise FitError("Collapse fit needs a positive initial visibility.")
    below = np.flatnonzero(values <= COLLAPSE_FLOOR * values[0])
    stop = below[0] if len(below) else len(values)
    if stop < 3:
        raise FitError("Too few samples before the collapse.", {"samples": int(stop)})
    return fit_gaussian_decay(times[:stop], values[:stop] / values[0])
