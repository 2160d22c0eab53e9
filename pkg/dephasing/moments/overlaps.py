# moments/overlaps.py
"""
dV-weighted overlaps of the +/- mode functions.

    (x|y) = integral of dV(r) e^{-2 i lambda t} conj(x) y d^3r

Mode functions are any object with `product(bra, ket)` returning
conj(bra) * ket as a RadialField for the names psi_plus, psi_minus,
phi_plus, phi_minus, plus `gamma_plus`, `gamma_minus`, `i_integral`,
`u_tilde`, `n_total`, `u0` and `hbar`. `ZeroOrderSolution` and
`ModeFunctions` both qualify.
"""
import logging
import math
from dataclasses import dataclass

import numpy as np

from core.exceptions import GridMismatchError
from core.grid import RadialField, integrate_radial

logger = logging.getLogger(__name__)


def _carrier(params, t):
    return np.exp(-2j * params.lambda_coupling * t)


def weighted_overlap(product, params, t):
    """Overlap of a precomputed product conj(x) y."""
    weight = params.delta_v(product.grid.nodes)
    return complex(integrate_radial(product * weight) * _carrier(params, t))


def overlap(bra, ket, params, t):
    """
    (bra|ket) at time t.

    Raises:
        GridMismatchError: If the fields live on different grids.
    """
    if not bra.grid.same_as(ket.grid):
        raise GridMismatchError("Overlap needs both fields on one grid.")
    return weighted_overlap(bra.conj() * ket, params, t)


@dataclass(frozen=True, eq=False)
class ModeFunctions:
    """
    Numeric psi_pm, phi_pm with their normalization integrals.

    gamma_pm are Re of the integral of conj(phi_pm) psi_pm; `i_integral`
    is the integral of Re(psi_- conj(phi_-)) Re(psi_+ conj(phi_+)).
    """

    psi_plus: RadialField
    psi_minus: RadialField
    phi_plus: RadialField
    phi_minus: RadialField
    u_tilde: float
    n_total: float
    u0: float
    hbar: float = 1.0

    def __post_init__(self):
        grid = self.psi_plus.grid
        for field in (self.psi_minus, self.phi_plus, self.phi_minus):
            if not grid.same_as(field.grid):
                raise GridMismatchError("Mode functions must share one grid.")

    @classmethod
    def from_fields(cls, psi_plus, psi_minus, phi_plus, phi_minus, params, u_tilde):
        return cls(psi_plus, psi_minus, phi_plus, phi_minus,
                   u_tilde, params.n_total, params.u0, params.hbar)

    @property
    def grid(self):
        return self.psi_plus.grid

    def field(self, name):
        return getattr(self, name)

    def product(self, bra, ket):
        return self.field(bra).conj() * self.field(ket)

    @property
    def gamma_plus(self):
        return float(np.real(integrate_radial(self.product("phi_plus", "psi_plus"))))

    @property
    def gamma_minus(self):
        return float(np.real(integrate_radial(self.product("phi_minus", "psi_minus"))))

    @property
    def i_integral(self):
        minus = self.product("phi_minus", "psi_minus").values.real
        plus = self.product("phi_plus", "psi_plus").values.real
        return integrate_radial(RadialField(self.grid, minus * plus))


@dataclass(frozen=True)
class OverlapIntegrals:
    """
    Coefficients of the collective-operator equations at one instant.

    Attributes:
        phi_psi (complex): (phi_+|psi_-).
        psi_phi (complex): (psi_+|phi_-).
        psi_psi (complex): (psi_+|psi_-).
        phi_phi (complex): (phi_+|phi_-), finite only with cut phi fields.
        gamma_plus, gamma_minus (float): Re J_pm.
        i_integral (float): Integral of Re(psi_- conj(phi_-)) Re(psi_+ conj(phi_+)).
        u_tilde (float): Effective interaction u~.
    """

    phi_psi: complex
    psi_phi: complex
    psi_psi: complex
    phi_phi: complex
    gamma_plus: float
    gamma_minus: float
    i_integral: float
    u_tilde: float

    def __post_init__(self):
        values = (self.phi_psi, self.psi_phi, self.psi_psi, self.phi_phi, self.gamma_plus,
                  self.gamma_minus, self.i_integral, self.u_tilde)
        if not all(np.isfinite(v) for v in values):
            raise ValueError("Overlap integrals must be finite; regularize phi first.")

    @property
    def gamma_sum(self):
        return self.gamma_plus + self.gamma_minus


def mode_overlaps(modes, params, t):
    """
    Every overlap and normalization integral entering the generator.

    Logs a warning when gamma_+ + gamma_- strays from 1 by more than 1e-6.
    """
    integrals = OverlapIntegrals(
        phi_psi=weighted_overlap(modes.product("phi_plus", "psi_minus"), params, t),
        psi_phi=weighted_overlap(modes.product("psi_plus", "phi_minus"), params, t),
        psi_psi=weighted_overlap(modes.product("psi_plus", "psi_minus"), params, t),
        phi_phi=weighted_overlap(modes.product("phi_plus", "phi_minus"), params, t),
        gamma_plus=float(modes.gamma_plus),
        gamma_minus=float(modes.gamma_minus),
        i_integral=float(modes.i_integral),
        u_tilde=float(modes.u_tilde),
    )
    if not math.isclose(integrals.gamma_sum, 1.0, abs_tol=1e-6):
        logger.warning("gamma_+ + gamma_- = %.9f, expected 1", integrals.gamma_sum)
    return integrals
