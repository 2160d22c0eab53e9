# hydro/zero_order.py
"""
Zero-order +/- fields in the hydrodynamic limit and their conjugate functions.

    psi_pm = sqrt(N_pm) / N * sqrt(rho) * exp(i theta_pm)
    phi_pm = alpha / conj(psi_pm),     alpha = 3 / (8 pi r0^3)

phi diverges at the edge of the ball and is cut at r0 - xi. Every product
of a phi with a psi is bounded, so those are evaluated from their closed
forms on the whole ball instead of from the cut samples.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from django.conf import settings

from core.exceptions import PhysicalDomainError
from core.grid import RadialField, RadialGrid, integrate_radial

from .thomas_fermi import (
    HydroPhases,
    TFState,
    chemical_potential_tf,
    healing_length,
    stationary_radius,
    tf_density,
)

logger = logging.getLogger(__name__)

FIELD_NAMES = ("psi_plus", "psi_minus", "phi_plus", "phi_minus")


def _split(name):
    if name not in FIELD_NAMES:
        raise ValueError(f"Unknown field {name!r}; expected one of {FIELD_NAMES}.")
    kind, sign = name.split("_")
    return kind, sign


@dataclass(frozen=True, eq=False)
class ZeroOrderSolution:
    """
    Thomas-Fermi zero-order solution of the +/- equations at one instant.

    Attributes:
        grid (RadialGrid): Uniform grid on the closed ball [0, r0].
        psi_plus, psi_minus (RadialField): psi_pm^(0).
        phi_plus, phi_minus (RadialField): phi_pm^(0), zero for r >= r0 - xi.
        alpha (float): 3 / (8 pi r0^3).
        gamma_plus, gamma_minus (float): Re of the integral of phi_pm^* psi_pm.
        u_tilde0 (float): 4 u0 alpha.
        n_plus, n_minus (float): Atom numbers of the + and - modes.
        r0 (float): Thomas-Fermi radius.
        xi (float): Healing length used for the cut.
        phases (HydroPhases): Single-instant phase coefficients.
        u0 (float): Contact coupling.
        hbar (float): Reduced Planck constant.
    """

    grid: RadialGrid
    psi_plus: RadialField
    psi_minus: RadialField
    phi_plus: RadialField
    phi_minus: RadialField
    alpha: float
    gamma_plus: float
    gamma_minus: float
    u_tilde0: float
    n_plus: float
    n_minus: float
    r0: float
    xi: float
    phases: HydroPhases
    u0: float
    hbar: float = 1.0

    @property
    def n_total(self):
        return self.n_plus + self.n_minus

    @property
    def u_tilde(self):
        return self.u_tilde0

    @property
    def density(self):
        return RadialField(self.grid, tf_density(self.grid.nodes, self.r0, self.n_total))

    def amplitude(self, sign):
        """sqrt(N_pm) / N for sign "plus" or "minus"."""
        n_sign = self.n_plus if sign == "plus" else self.n_minus
        return math.sqrt(n_sign) / self.n_total

    def theta(self, sign):
        b_coeff = self.phases.b_plus if sign == "plus" else self.phases.b_minus
        return (self.phases.a_coeff * self.grid.nodes ** 2 + b_coeff) / self.hbar

    def field(self, name):
        return getattr(self, name)

    def product(self, bra, ket):
        """
        conj(bra) * ket on the grid.

        Products of a phi with a psi use their closed form
        alpha * (a_ket / a_bra) * exp(i (theta_ket - theta_bra)), so they stay
        bounded up to r0. Products of two phi use the cut samples.
        """
        bra_kind, bra_sign = _split(bra)
        ket_kind, ket_sign = _split(ket)
        if bra_kind == ket_kind:
            return self.field(bra).conj() * self.field(ket)
        phase = np.exp(1j * (self.theta(ket_sign) - self.theta(bra_sign)))
        a_bra, a_ket = self.amplitude(bra_sign), self.amplitude(ket_sign)
        ratio = a_ket / a_bra if bra_kind == "phi" else a_bra / a_ket
        return RadialField(self.grid, self.alpha * ratio * phase)

    def j_integral(self, sign):
        """J_pm, the integral of conj(phi_pm) psi_pm."""
        return integrate_radial(self.product(f"phi_{sign}", f"psi_{sign}"))

    @property
    def i_integral(self):
        """Integral of Re(psi_- conj(phi_-)) Re(psi_+ conj(phi_+)); alpha / 2 here."""
        minus = self.product("psi_minus", "phi_minus").conj().values.real
        plus = self.product("psi_plus", "phi_plus").conj().values.real
        return integrate_radial(RadialField(self.grid, minus * plus))


def zero_order_solution(tf_state, phases, n_plus, n_minus, params, n_points=None, xi=None):
    """
    Samples the zero-order +/- fields and their conjugates.

    Args:
        tf_state (TFState): Radius of the ball.
        phases (HydroPhases): Single-instant phase coefficients, or None for
            A = B_pm = 0.
        n_plus (float): Atoms in the + mode, > 0.
        n_minus (float): Atoms in the - mode, > 0.
        params (PhysicalParams): N must equal n_plus + n_minus.
        n_points (int, optional): Grid size on [0, r0]. Defaults to
            settings.DEPHASING['GRID_POINTS'].
        xi (float, optional): Cut length for phi. Defaults to the healing
            length at r0.

    Returns:
        ZeroOrderSolution: Fields with gamma_pm = 1/2 and u_tilde0 = 4 u0 alpha.

    Raises:
        PhysicalDomainError: If a mode is empty, the populations do not add
            up to N, or xi >= r0.
    """
    if not (n_plus > 0 and n_minus > 0):
        raise PhysicalDomainError(
            "Both modes need atoms: phi = alpha / conj(psi) diverges for an empty mode.",
            {"n_plus": n_plus, "n_minus": n_minus},
        )
    if abs(n_plus + n_minus - params.n_total) > 1e-12 * params.n_total:
        raise PhysicalDomainError(
            f"N_+ + N_- = {n_plus + n_minus} differs from N = {params.n_total}."
        )
    if phases is None:
        phases = HydroPhases()
    if n_points is None:
        n_points = settings.DEPHASING["GRID_POINTS"]
    r0 = tf_state.r0
    if xi is None:
        xi = healing_length(params, r0)
    if xi >= r0:
        raise PhysicalDomainError(f"xi = {xi:g} is not smaller than r0 = {r0:g}.")

    grid = RadialGrid.uniform(r0, n_points)
    r = grid.nodes
    rho = tf_density(r, r0, params.n_total)
    alpha = 3.0 / (8.0 * math.pi * r0 ** 3)
    inside = r < r0 - xi

    fields = {}
    for sign, n_sign, b_coeff in (("plus", n_plus, phases.b_plus),
                                  ("minus", n_minus, phases.b_minus)):
        theta = (phases.a_coeff * r ** 2 + b_coeff) / params.hbar
        psi = math.sqrt(n_sign) / params.n_total * np.sqrt(rho) * np.exp(1j * theta)
        phi = np.zeros_like(psi)
        phi[inside] = alpha / np.conj(psi[inside])
        fields[f"psi_{sign}"] = RadialField(grid, psi)
        fields[f"phi_{sign}"] = RadialField(grid, phi)

    draft = ZeroOrderSolution(
        grid=grid, alpha=alpha, gamma_plus=0.0, gamma_minus=0.0,
        u_tilde0=4.0 * params.u0 * alpha, n_plus=n_plus, n_minus=n_minus,
        r0=r0, xi=xi, phases=phases, u0=params.u0, hbar=params.hbar, **fields,
    )
    gamma_plus = draft.j_integral("plus").real
    gamma_minus = draft.j_integral("minus").real
    logger.debug("zero order: r0=%g xi/r0=%g gamma=(%.12f, %.12f)",
                 r0, xi / r0, gamma_plus, gamma_minus)
    return replace(draft, gamma_plus=gamma_plus, gamma_minus=gamma_minus)


def stationary_zero_order(params, population_fraction=0.5, delta_b=0.0, n_points=None):
    """
    Zero-order solution at the stationary radius.

    Args:
        params (PhysicalParams): System parameters.
        population_fraction (float): N_+ / N.
        delta_b (float): B_+ - B_-, i.e. hbar times the initial phase offset.
        n_points (int, optional): Grid size.
    """
    n_plus = population_fraction * params.n_total
    return zero_order_solution(
        TFState(stationary_radius(params)),
        HydroPhases(0.0, delta_b, 0.0),
        n_plus, params.n_total - n_plus, params, n_points=n_points,
    )


def phi_equation_residual(zo, params):
    """
    Relative residual of the phi_pm equations with delta V = 0.

    Substitutes phi_pm^(0) into

        [L + u0 (2 rho_pm + rho_mp)] phi_pm + N u0 psi_pm^2 conj(phi_pm)
        + N u0 psi_pm (psi_mp conj(phi_mp) + conj(psi_mp) phi_mp) - N u_tilde psi_pm

    and compares with the frequency (L + u0 rho) phi_pm of the psi_pm
    equation, gradient terms dropped. Only nodes with r < 0.9 r0 (and
    inside the phi cut) are used.

    Returns:
        float: max |difference| / max |u0 rho phi| over those nodes.
    """
    r = zo.grid.nodes
    interior = r < min(0.9 * zo.r0, zo.r0 - zo.xi)
    n_total = zo.n_total
    fields = {name: zo.field(name).values[interior] for name in FIELD_NAMES}
    rho_sign = {
        "plus": n_total * np.abs(fields["psi_plus"]) ** 2,
        "minus": n_total * np.abs(fields["psi_minus"]) ** 2,
    }
    rho = rho_sign["plus"] + rho_sign["minus"]
    frequency = params.potential_mean(r[interior]) + params.u0 * rho

    worst, scale = 0.0, 0.0
    for sign, other in (("plus", "minus"), ("minus", "plus")):
        psi, phi = fields[f"psi_{sign}"], fields[f"phi_{sign}"]
        psi_o, phi_o = fields[f"psi_{other}"], fields[f"phi_{other}"]
        rhs = (
            (params.potential_mean(r[interior])
             + params.u0 * (2 * rho_sign[sign] + rho_sign[other])) * phi
            + n_total * params.u0 * psi ** 2 * np.conj(phi)
            + n_total * params.u0 * psi * (psi_o * np.conj(phi_o) + np.conj(psi_o) * phi_o)
            - n_total * zo.u_tilde0 * psi
        )
        worst = max(worst, float(np.max(np.abs(rhs - frequency * phi))))
        scale = max(scale, float(np.max(np.abs(params.u0 * rho * phi))))
    return worst / scale if scale > 0 else worst


@dataclass(frozen=True, eq=False)
class UTildeEstimate:
    """
    u_tilde along sample times from a family of solutions at neighbouring N.

    Attributes:
        times (ndarray): Sample times.
        u_tilde (ndarray): Estimate from the centred difference in N.
        forward (ndarray): Estimate from the forward difference.
        backward (ndarray): Estimate from the backward difference.
        n_step (float): Atom-number step of the differences.
    """

    times: np.ndarray
    u_tilde: np.ndarray
    forward: np.ndarray
    backward: np.ndarray
    n_step: float

    @property
    def mean(self):
        return float(np.mean(self.u_tilde))


def _default_n_step(params):
    return max(1.0, 1e-3 * params.n_total)


def _gauge_integrals(family, n_total, t, grid, n_step):
    """Im of sum_pm int conj(psi_pm) dpsi_pm/dN: centred, forward and backward."""
    base = family(n_total, t, grid)
    upper = family(n_total + n_step, t, grid)
    lower = family(n_total - n_step, t, grid)
    centred = forward = backward = 0.0
    for psi, up, down in zip(base, upper, lower):
        centred += integrate_radial(psi.conj() * (up - down)).imag / (2 * n_step)
        forward += integrate_radial(psi.conj() * (up - psi)).imag / n_step
        backward += integrate_radial(psi.conj() * (psi - down)).imag / n_step
    return centred, forward, backward


def phase_gauge_f(family, params, t, grid, n_step=None):
    """
    Gauge function f(t) = hbar / (2 i N) + hbar Im sum_pm int conj(psi_pm) dpsi_pm/dN.

    Args:
        family (callable): family(n_total, t, grid) -> (psi_plus, psi_minus).
        params (PhysicalParams): Supplies N and hbar.
        t (float): Time.
        grid (RadialGrid): Grid shared by every member of the family.
        n_step (float, optional): Atom-number step, max(1, 1e-3 N) by default.

    Returns:
        complex: f(t); its imaginary part is the constant -hbar / (2N).
    """
    n_step = n_step or _default_n_step(params)
    centred, _, _ = _gauge_integrals(family, params.n_total, t, grid, n_step)
    return complex(params.hbar * centred, -params.hbar / (2 * params.n_total))


def compute_u_tilde_general(family, params, times, grid, n_step=None, tolerance=1e-2):
    """
    u_tilde = -2 df/dt from solutions at N and N +/- n_step.

    Args:
        family (callable): family(n_total, t, grid) -> (psi_plus, psi_minus).
        params (PhysicalParams): Supplies N and hbar.
        times (array_like): At least two increasing times.
        grid (RadialGrid): Grid shared by every member of the family.
        n_step (float, optional): Atom-number step, max(1, 1e-3 N) by default.
        tolerance (float): Relative disagreement between the forward and
            backward estimates above which a warning is logged.

    Returns:
        UTildeEstimate: Centred estimate with both one-sided estimates.
    """
    times = np.asarray(times, dtype=float)
    if len(times) < 2:
        raise ValueError("u_tilde needs at least two sample times.")
    n_step = n_step or _default_n_step(params)

    columns = np.array([
        _gauge_integrals(family, params.n_total, t, grid, n_step) for t in times
    ])
    centred, forward, backward = (
        -2.0 * params.hbar * np.gradient(columns[:, k], times) for k in range(3)
    )
    scale = np.max(np.abs(centred))
    spread = np.max(np.abs(forward - backward))
    if spread > tolerance * scale and spread > 0:
        logger.warning(
            "u_tilde: one-sided estimates disagree (forward %g, backward %g, n_step %g)",
            float(np.mean(forward)), float(np.mean(backward)), n_step,
        )
    return UTildeEstimate(times, centred, forward, backward, n_step)


def tf_family(params, population_fraction=0.5):
    """
    Stationary Thomas-Fermi +/- fields as a function of the atom number.

    Each member is sqrt(fraction * rho_N / N) exp(-i mu(N) t / hbar) with
    the fraction of atoms in the + mode held fixed.
    """
    fractions = (population_fraction, 1.0 - population_fraction)

    def family(n_total, t, grid):
        member = params.replace(n_total=n_total)
        r0 = stationary_radius(member)
        mu = chemical_potential_tf(member, r0)
        shape = np.sqrt(tf_density(grid.nodes, r0, n_total) / n_total)
        rotation = np.exp(-1j * mu * t / params.hbar)
        return tuple(RadialField(grid, math.sqrt(f) * shape * rotation) for f in fractions)

    return family


def tf_cross_correlation_initial(grid, params, r0, n_a, n_b, delta_phi=0.0, a_coeff=0.0):
    """
    Self-similar A/B fields sqrt(15 N_X / (8 pi N r0^3)) sqrt(1 - r^2/r0^2) e^{i theta_X}.

    psi_B carries the extra phase delta_phi, so that the relative phase
    arg of the integral of conj(psi_A) psi_B equals delta_phi.

    Returns:
        tuple[RadialField, RadialField]: (psi_A, psi_B) normalized so that
        N times the integral of |psi_X|^2 is N_X.
    """
    if abs(n_a + n_b - params.n_total) > 1e-12 * params.n_total:
        raise PhysicalDomainError("N_A + N_B must equal N.")
    shape = np.sqrt(tf_density(grid.nodes, r0, params.n_total)) / params.n_total
    chirp = np.exp(1j * a_coeff * grid.nodes ** 2 / params.hbar)
    psi_a = math.sqrt(n_a) * shape * chirp
    psi_b = math.sqrt(n_b) * shape * chirp * np.exp(1j * delta_phi)
    return RadialField(grid, psi_a), RadialField(grid, psi_b)
