# gpe/fields.py
import math
from dataclasses import dataclass, replace

import numpy as np

from core.exceptions import GridMismatchError
from core.grid import RadialField, integrate_radial
from josephson.dynamics import TwoModeState

AB = "AB"
PLUS_MINUS = "PlusMinus"
BASES = (AB, PLUS_MINUS)


@dataclass(frozen=True, eq=False)
class CoupledField:
    """
    Two-component mean field at one instant.

    The components are normalized together: N times the integral of
    |first|^2 + |second|^2 is the total atom number.

    Attributes:
        first (RadialField): psi_A or psi_+.
        second (RadialField): psi_B or psi_-.
        basis (str): AB or PLUS_MINUS.
        time (float): Time of the snapshot.
    """

    first: RadialField
    second: RadialField
    basis: str = AB
    time: float = 0.0

    def __post_init__(self):
        if self.basis not in BASES:
            raise ValueError(f"Unknown basis {self.basis!r}; expected one of {BASES}.")
        if not self.first.grid.same_as(self.second.grid):
            raise GridMismatchError("Both components must share one radial grid.")

    @property
    def grid(self):
        return self.first.grid

    def with_values(self, first, second, time=None):
        """Copy holding new sample arrays on the same grid."""
        return replace(
            self,
            first=RadialField(self.grid, first),
            second=RadialField(self.grid, second),
            time=self.time if time is None else time,
        )


def transform_basis(state, params):
    """
    Maps between the A/B and +/- components at the state's time.

        psi_pm = exp(-/+ i lambda t) (psi_A +/- psi_B) / sqrt(2)

    The map is unitary; applying it twice returns to the starting basis.
    """
    phase = np.exp(1j * params.lambda_coupling * state.time)
    a, b = state.first.values, state.second.values
    if state.basis == AB:
        plus = (a + b) / (math.sqrt(2) * phase)
        minus = (a - b) * phase / math.sqrt(2)
        return replace(state.with_values(plus, minus), basis=PLUS_MINUS)
    psi_a = (a * phase + b / phase) / math.sqrt(2)
    psi_b = (a * phase - b / phase) / math.sqrt(2)
    return replace(state.with_values(psi_a, psi_b), basis=AB)


def as_ab(state, params):
    return state if state.basis == AB else transform_basis(state, params)


def two_mode_reduction(state, params):
    """
    Population difference and relative phase of a mean-field state.

    Returns:
        TwoModeState: delta_n = N_A - N_B and delta_phi = arg of the
        integral of conj(psi_A) psi_B.
    """
    ab = as_ab(state, params)
    n_total = params.n_total
    n_a = n_total * integrate_radial(ab.first.abs2())
    n_b = n_total * integrate_radial(ab.second.abs2())
    overlap = integrate_radial(ab.first.conj() * ab.second)
    return TwoModeState(n_a - n_b, float(np.angle(overlap)))


def snapshot_rows(state):
    """Rows (r, Re first, Im first, Re second, Im second)."""
    first, second = state.first.values, state.second.values
    return np.column_stack([state.grid.nodes, first.real, first.imag, second.real, second.imag])
