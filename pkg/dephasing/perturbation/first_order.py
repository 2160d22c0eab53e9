# perturbation/first_order.py
"""
First-order corrections to the +/- mode functions in the asymmetry dV.

With dV~ = dV e^{-2 i lambda t} the corrections carry the two carriers

    psi_pm^(1) = A_pm e^{2 i lambda t} + B_pm e^{-2 i lambda t}
    phi_pm^(1) = C_pm e^{2 i lambda t} + D_pm e^{-2 i lambda t}

and, with gradients dropped, the linearized equations reduce at every node
to the 8x8 system M x = s for x ordered

    (A+, A+*, B+, B+*, A-, A-*, B-, B-*)

(C, D in place of A, B for phi). M = Lambda + M0 is shared by both
systems; only the sources differ.
"""
import logging
import math
from dataclasses import dataclass, replace

import numpy as np
from django.conf import settings

from core.exceptions import PhysicalDomainError, ResonanceError
from core.grid import RadialField, RadialGrid, cumulative_radial, integrate_radial
from hydro.thomas_fermi import tf_density

logger = logging.getLogger(__name__)

SIGNS = (("plus", "minus"), ("minus", "plus"))
ORDER = ("A+", "A+*", "B+", "B+*", "A-", "A-*", "B-", "B-*")
FORWARD, BACKWARD = 1, -1

_MAX_CONDITION = 1e12
_MAX_EXCLUDED = 0.01


def _block(sign):
    """Rows of the forward, its conjugate, the backward and its conjugate."""
    base = 0 if sign == "plus" else 4
    return base, base + 1, base + 2, base + 3


def boundary_zero_order(zo, params, xi=None, n_points=None):
    """
    Resamples a zero-order solution on a graded grid ending at r0 - xi.

    phi_pm = alpha / conj(psi_pm) is sampled without a cut, since every node
    lies inside the ball. gamma_pm keep their values on the full ball.

    Args:
        zo (ZeroOrderSolution): Solution on the closed ball.
        params (PhysicalParams): Supplies N and hbar.
        xi (float, optional): Cut length; zo.xi by default.
        n_points (int, optional): Defaults to
            settings.DEPHASING['BOUNDARY_GRID_POINTS'].

    Raises:
        PhysicalDomainError: If xi is not in (0, r0).
    """
    xi = zo.xi if xi is None else xi
    if not 0 < xi < zo.r0:
        raise PhysicalDomainError(f"xi = {xi:g} must lie in (0, r0 = {zo.r0:g}).")
    if n_points is None:
        n_points = settings.DEPHASING.get("BOUNDARY_GRID_POINTS", 2049)
    grid = RadialGrid.graded(zo.r0 - xi, n_points)
    r = grid.nodes
    root_rho = np.sqrt(tf_density(r, zo.r0, zo.n_total))

    fields = {}
    for sign, _ in SIGNS:
        b_coeff = zo.phases.b_plus if sign == "plus" else zo.phases.b_minus
        theta = (zo.phases.a_coeff * r ** 2 + b_coeff) / params.hbar
        psi = zo.amplitude(sign) * root_rho * np.exp(1j * theta)
        fields[f"psi_{sign}"] = RadialField(grid, psi)
        fields[f"phi_{sign}"] = RadialField(grid, zo.alpha / np.conj(psi))
    return replace(zo, grid=grid, xi=xi, **fields)


@dataclass(frozen=True, eq=False)
class CorrectionFunctions:
    """
    Fourier components of the first-order corrections on a boundary grid.

    Attributes:
        zero_order (ZeroOrderSolution): Zero-order fields on the same grid.
        a_plus, a_minus, b_plus, b_minus (RadialField): psi corrections.
        c_plus, c_minus, d_plus, d_minus (RadialField): phi corrections, None
            until `solve_first_order_phi` ran.
        excluded (ndarray): Nodes left out as resonant.
        excluded_fraction (float): Their share of the Thomas-Fermi volume.
        lambda_coupling (float): lambda of the carriers.
        hbar (float): Reduced Planck constant.
    """

    zero_order: object
    a_plus: RadialField
    a_minus: RadialField
    b_plus: RadialField
    b_minus: RadialField
    excluded: np.ndarray
    excluded_fraction: float
    lambda_coupling: float
    hbar: float = 1.0
    c_plus: RadialField = None
    c_minus: RadialField = None
    d_plus: RadialField = None
    d_minus: RadialField = None

    @property
    def grid(self):
        return self.zero_order.grid

    @property
    def has_phi(self):
        return self.c_plus is not None

    def first_order(self, name):
        """(forward, backward) components of a field's correction."""
        kind, sign = name.split("_")
        forward, backward = ("a", "b") if kind == "psi" else ("c", "d")
        pair = getattr(self, f"{forward}_{sign}"), getattr(self, f"{backward}_{sign}")
        if pair[0] is None:
            zero = RadialField.zeros(self.grid)
            return zero, zero
        return pair

    def correction(self, name, t):
        forward, backward = self.first_order(name)
        carrier = np.exp(2j * self.lambda_coupling * t)
        return forward * carrier + backward * np.conj(carrier)

    def column_names(self):
        return ["r"] + [f"abs_{name}" for name in (
            "a_plus", "b_plus", "a_minus", "b_minus",
            "c_plus", "d_plus", "c_minus", "d_minus",
        )]

    def as_rows(self):
        columns = [self.grid.nodes]
        for kind in ("psi", "phi"):
            for sign in ("plus", "minus"):
                for part in self.first_order(f"{kind}_{sign}"):
                    columns.append(np.abs(part.values))
        return np.column_stack(columns)


def system_matrix(zo, params):
    """
    M = Lambda + M0 at every node of zo's grid, shape (n, 8, 8).

    The local terms L0^pm = u0 rho_pm are what remains of the linearized
    Gross-Pitaevskii operator once gradients are dropped and mu is removed.
    """
    g = params.n_total * params.u0
    shift = 2.0 * params.hbar * params.lambda_coupling
    psi = {"plus": zo.psi_plus.values, "minus": zo.psi_minus.values}
    matrix = np.zeros((zo.grid.n_points, 8, 8), dtype=complex)
    for sign, other in SIGNS:
        a, ac, b, bc = _block(sign)
        oa, oac, ob, obc = _block(other)
        ps, po = psi[sign], psi[other]
        local = g * np.abs(ps) ** 2

        matrix[:, a, a] = local + shift
        matrix[:, a, bc] = g * ps ** 2
        matrix[:, a, oa] = g * ps * np.conj(po)
        matrix[:, a, obc] = g * ps * po

        matrix[:, ac, ac] = local + shift
        matrix[:, ac, b] = g * np.conj(ps) ** 2
        matrix[:, ac, oac] = g * np.conj(ps) * po
        matrix[:, ac, ob] = g * np.conj(ps * po)

        matrix[:, b, b] = local - shift
        matrix[:, b, ac] = g * ps ** 2
        matrix[:, b, ob] = g * ps * np.conj(po)
        matrix[:, b, oac] = g * ps * po

        matrix[:, bc, bc] = local - shift
        matrix[:, bc, a] = g * np.conj(ps) ** 2
        matrix[:, bc, obc] = g * np.conj(ps) * po
        matrix[:, bc, oa] = g * np.conj(ps * po)
    return matrix


def _add_coupling_source(rhs, zo, params, kind):
    """
    Subtracts the dV coupling of each mode to its partner.

    dV~ multiplies e^{-2 i lambda t} in the + equation and e^{+2 i lambda t}
    in the - equation, so the + source sits in the backward rows and the -
    source in the forward rows.
    """
    dv = params.delta_v(zo.grid.nodes)
    partner = {
        "plus": zo.field(f"{kind}_minus").values,
        "minus": zo.field(f"{kind}_plus").values,
    }
    for sign, _ in SIGNS:
        a, ac, b, bc = _block(sign)
        row, conj_row = (b, bc) if sign == "plus" else (a, ac)
        rhs[:, row] -= dv * partner[sign]
        rhs[:, conj_row] -= dv * np.conj(partner[sign])
    return rhs


def _solve_nodes(matrix, rhs, zo, max_condition, max_excluded):
    """
    Batched per-node solves.

    Nodes whose condition number exceeds `max_condition` are left at zero.

    Raises:
        ResonanceError: If excluded nodes carry more than `max_excluded` of
            the Thomas-Fermi volume.
    """
    if max_condition is None:
        max_condition = settings.DEPHASING.get("MAX_CONDITION_NUMBER", _MAX_CONDITION)
    if max_excluded is None:
        max_excluded = settings.DEPHASING.get("MAX_EXCLUDED_FRACTION", _MAX_EXCLUDED)
    condition = np.linalg.cond(matrix)
    usable = np.isfinite(condition) & (condition <= max_condition)

    solution = np.zeros_like(rhs)
    if np.any(usable):
        solution[usable] = np.linalg.solve(matrix[usable], rhs[usable][..., None])[..., 0]

    excluded = ~usable
    ball = 4.0 * math.pi * zo.r0 ** 3 / 3.0
    fraction = float(np.sum(zo.grid.weights[excluded])) / ball
    if fraction > max_excluded:
        raise ResonanceError(
            f"Resonant nodes exclude {fraction:.2%} of the Thomas-Fermi volume.",
            {
                "excluded_fraction": fraction,
                "excluded_nodes": int(np.count_nonzero(excluded)),
                "max_condition": float(np.max(condition)),
            },
        )
    if np.any(excluded):
        logger.warning("first order: %d resonant nodes excluded (%.3g of the volume)",
                       int(np.count_nonzero(excluded)), fraction)
    return solution, excluded, fraction


def _unpack(grid, solution, names):
    return {name: RadialField(grid, solution[:, column])
            for name, column in zip(names, (0, 2, 4, 6))}


def solve_first_order_psi(zo, params, max_condition=None, max_excluded=None):
    """
    Solves the psi system with source -dV (0, 0, psi_-, psi_-*, psi_+, psi_+*, 0, 0).

    Args:
        zo (ZeroOrderSolution): Zero-order fields. Anything but a graded
            grid is first resampled by `boundary_zero_order`.
        params (PhysicalParams): Supplies dV, lambda, N, u0 and hbar.
        max_condition (float, optional): Largest usable condition number.
        max_excluded (float, optional): Largest tolerated excluded volume
            fraction.

    Returns:
        CorrectionFunctions: A_pm, B_pm on the boundary grid.

    Raises:
        PhysicalDomainError: If lambda = 0.
        ResonanceError: If too many nodes are resonant.
    """
    if not params.lambda_coupling > 0:
        raise PhysicalDomainError("First-order corrections need lambda > 0.")
    if zo.grid.kind != "graded":
        zo = boundary_zero_order(zo, params)
    matrix = system_matrix(zo, params)
    rhs = _add_coupling_source(np.zeros((zo.grid.n_points, 8), dtype=complex), zo, params, "psi")
    solution, excluded, fraction = _solve_nodes(matrix, rhs, zo, max_condition, max_excluded)
    logger.debug("psi corrections solved on %d nodes", zo.grid.n_points)
    return CorrectionFunctions(
        zero_order=zo,
        excluded=excluded,
        excluded_fraction=fraction,
        lambda_coupling=params.lambda_coupling,
        hbar=params.hbar,
        **_unpack(zo.grid, solution, ("a_plus", "b_plus", "a_minus", "b_minus")),
    )


def phi_sources(corrections, params):
    """
    T-vector of the phi system: the psi corrections fed through the phi equations.

        T1 = c A_s - 2 g psi_s phi_s B_s* - g (phi_s psi_o* + psi_s phi_o*) A_o
             - g (phi_s psi_o + psi_s phi_o) B_o*
        T2 = the same with A <-> B

    with c = N u~ - 2 g (phi_s psi_s* + phi_s* psi_s) - g (phi_o psi_o* + phi_o* psi_o),
    g = N u0, s the block's sign and o the other one.
    """
    zo = corrections.zero_order
    g = params.n_total * params.u0
    n_u_tilde = params.n_total * zo.u_tilde0
    psi = {sign: zo.field(f"psi_{sign}").values for sign, _ in SIGNS}
    phi = {sign: zo.field(f"phi_{sign}").values for sign, _ in SIGNS}
    forward = {sign: getattr(corrections, f"a_{sign}").values for sign, _ in SIGNS}
    backward = {sign: getattr(corrections, f"b_{sign}").values for sign, _ in SIGNS}

    rhs = np.zeros((zo.grid.n_points, 8), dtype=complex)
    for sign, other in SIGNS:
        ps, po, fs, fo = psi[sign], psi[other], phi[sign], phi[other]
        own = (n_u_tilde - 2 * g * (fs * np.conj(ps) + np.conj(fs) * ps)
               - g * (fo * np.conj(po) + np.conj(fo) * po))
        cross = g * (fs * np.conj(po) + ps * np.conj(fo))
        pair = g * (fs * po + ps * fo)
        t1 = (own * forward[sign] - 2 * g * ps * fs * np.conj(backward[sign])
              - cross * forward[other] - pair * np.conj(backward[other]))
        t2 = (own * backward[sign] - 2 * g * ps * fs * np.conj(forward[sign])
              - cross * backward[other] - pair * np.conj(forward[other]))
        a, ac, b, bc = _block(sign)
        rhs[:, a], rhs[:, ac] = t1, np.conj(t1)
        rhs[:, b], rhs[:, bc] = t2, np.conj(t2)
    return rhs


def solve_first_order_phi(zo, psi_corr, params, max_condition=None, max_excluded=None):
    """
    Solves the phi system M y = T - dV (0, 0, phi_-, phi_-*, phi_+, phi_+*, 0, 0).

    Args:
        zo (ZeroOrderSolution): Solution whose populations match `psi_corr`.
        psi_corr (CorrectionFunctions): Output of `solve_first_order_psi`.
        params (PhysicalParams): As for `solve_first_order_psi`.

    Returns:
        CorrectionFunctions: `psi_corr` with C_pm, D_pm filled in.
    """
    boundary = psi_corr.zero_order
    if abs(boundary.n_plus - zo.n_plus) > 1e-12 * zo.n_total or boundary.r0 != zo.r0:
        raise ValueError("psi corrections belong to a different zero-order solution.")
    matrix = system_matrix(boundary, params)
    rhs = _add_coupling_source(phi_sources(psi_corr, params), boundary, params, "phi")
    solution, excluded, fraction = _solve_nodes(
        matrix, rhs, boundary, max_condition, max_excluded
    )
    return replace(
        psi_corr,
        excluded=excluded | psi_corr.excluded,
        excluded_fraction=max(fraction, psi_corr.excluded_fraction),
        **_unpack(boundary.grid, solution, ("c_plus", "d_plus", "c_minus", "d_minus")),
    )


def _fourier(corrections, kind):
    """delta[k] and conj(delta)[k] for k = +1 (forward) and -1 (backward)."""
    parts = {}
    for sign, _ in SIGNS:
        forward, backward = (part.values for part in corrections.first_order(f"{kind}_{sign}"))
        parts[sign] = {
            FORWARD: (forward, np.conj(backward)),
            BACKWARD: (backward, np.conj(forward)),
        }
    return parts


def linearized_residual(corrections, params):
    """
    Relative residuals of the Fourier components of the linearized equations.

    Evaluates, for k = +/-1 and each sign s (o the other sign),

        k 2 hbar lambda d_s[k] + u0 drho[k] psi_s + dV psi_o [source rows]

    for the psi corrections, and the linearized phi equations including the
    psi corrections for the phi part. Resonant nodes are skipped.

    Returns:
        dict: {"psi": float, "phi": float or None}, each max |residual| over
        max |dV x zero order|.
    """
    zo = corrections.zero_order
    keep = ~corrections.excluded
    n_total, u0 = params.n_total, params.u0
    g = n_total * u0
    shift = 2.0 * params.hbar * params.lambda_coupling
    dv = params.delta_v(zo.grid.nodes)
    psi = {sign: zo.field(f"psi_{sign}").values for sign, _ in SIGNS}
    phi = {sign: zo.field(f"phi_{sign}").values for sign, _ in SIGNS}
    delta = _fourier(corrections, "psi")

    def source(sign, other, k, fields):
        active = (sign == "plus" and k == BACKWARD) or (sign == "minus" and k == FORWARD)
        return dv * fields[other] if active else 0.0

    def drho(k, sign=None):
        signs = [sign] if sign else ["plus", "minus"]
        return n_total * sum(
            np.conj(psi[s]) * delta[s][k][0] + psi[s] * delta[s][k][1] for s in signs
        )

    psi_worst = 0.0
    for k in (FORWARD, BACKWARD):
        for sign, other in SIGNS:
            residual = (k * shift * delta[sign][k][0] + u0 * drho(k) * psi[sign]
                        + source(sign, other, k, psi))
            psi_worst = max(psi_worst, float(np.max(np.abs(residual[keep]))))
    psi_scale = max(float(np.max(np.abs(dv * psi[s])[keep])) for s in ("plus", "minus"))
    result = {"psi": psi_worst / psi_scale if psi_scale else psi_worst, "phi": None}
    if not corrections.has_phi:
        return result

    gamma = _fourier(corrections, "phi")
    phi_worst = 0.0
    for k in (FORWARD, BACKWARD):
        for sign, other in SIGNS:
            ps, po, fs, fo = psi[sign], psi[other], phi[sign], phi[other]
            d_s, conj_d_s = delta[sign][k]
            d_o, conj_d_o = delta[other][k]
            c_s, conj_c_s = gamma[sign][k]
            c_o, conj_c_o = gamma[other][k]
            residual = (
                k * shift * c_s
                + g * np.abs(ps) ** 2 * c_s
                + u0 * (drho(k) + drho(k, sign)) * fs
                + 2 * g * ps * np.conj(fs) * d_s
                + g * ps ** 2 * conj_c_s
                + g * d_s * (po * np.conj(fo) + np.conj(po) * fo)
                + g * ps * (d_o * np.conj(fo) + po * conj_c_o + conj_d_o * fo + np.conj(po) * c_o)
                - n_total * zo.u_tilde0 * d_s
                + source(sign, other, k, phi)
            )
            phi_worst = max(phi_worst, float(np.max(np.abs(residual[keep]))))
    phi_scale = max(float(np.max(np.abs(dv * phi[s])[keep])) for s in ("plus", "minus"))
    result["phi"] = phi_worst / phi_scale if phi_scale else phi_worst
    return result


@dataclass(frozen=True)
class RegularizedOverlap:
    """
    A cut overlap and its value with the cut moved out to r0 - 2 xi.

    Attributes:
        value (complex): Integral up to r0 - xi.
        value_double_cut (complex): Integral up to r0 - 2 xi.
        xi (float): Cut length.
        r0 (float): Thomas-Fermi radius.
    """

    value: complex
    value_double_cut: complex
    xi: float
    r0: float

    @property
    def log_slope(self):
        """d value / d ln xi from the two cuts."""
        return (self.value_double_cut - self.value) / math.log(2.0)


def regularized_phi_phi(x, y, params, xi, r0, t=0.0):
    """
    (x|y) cut at r_cut = r0 - xi, for fields with a 1/psi divergence at r0.

    Args:
        x, y (RadialField): Fields sampled at least up to r0 - xi.
        params (PhysicalParams): Supplies dV and lambda.
        xi (float): Cut length.
        r0 (float): Thomas-Fermi radius.
        t (float): Time of the carrier.

    Raises:
        PhysicalDomainError: If xi >= r0.
        ValueError: If the grid stops short of r0 - xi.
    """
    if not 0 < xi < r0:
        raise PhysicalDomainError(f"xi = {xi:g} must lie in (0, r0 = {r0:g}).")
    r_cut = r0 - xi
    grid = x.grid
    if grid.r_max < r_cut * (1 - 1e-12):
        raise ValueError(f"Grid ends at {grid.r_max:g}, before the cut at {r_cut:g}.")
    integrand = x.conj() * y * params.delta_v(grid.nodes)
    running = cumulative_radial(integrand) * np.exp(-2j * params.lambda_coupling * t)

    def at(radius):
        radius = max(radius, 0.0)
        return complex(np.interp(radius, grid.nodes, running.real)
                       + 1j * np.interp(radius, grid.nodes, running.imag))

    return RegularizedOverlap(at(r_cut), at(r0 - 2 * xi), xi, r0)


@dataclass(frozen=True)
class SecularTerms:
    """
    Time-independent parts of the first-order phi-phi overlaps.

    Attributes:
        plus_first (float): Constant part of Re(phi_+^(1)|phi_-^(0)).
        minus_first (float): Constant part of Re(phi_+^(0)|phi_-^(1)).
        rate (float): Their contribution to dQ_rel/dt per hbar P_rel^(0).
    """

    plus_first: float
    minus_first: float
    rate: float


def secular_terms(zo, corrections, params):
    """
    Constant overlaps of the phi corrections with the zero-order phi.

    (phi_+^(1)|phi_-^(0)) keeps the integral of dV D_+* phi_- and
    (phi_+^(0)|phi_-^(1)) that of dV phi_+* C_-; both enter dQ_rel/dt with
    the weight -1/(gamma_+ gamma_-)^2.
    """
    if not corrections.has_phi:
        raise ValueError("Secular terms need the phi corrections.")
    boundary = corrections.zero_order
    dv = params.delta_v(boundary.grid.nodes)
    plus_first = integrate_radial(corrections.d_plus.conj() * boundary.phi_minus * dv)
    minus_first = integrate_radial(boundary.phi_plus.conj() * corrections.c_minus * dv)
    plus_first, minus_first = float(np.real(plus_first)), float(np.real(minus_first))
    weight = (zo.gamma_plus * zo.gamma_minus) ** 2
    rate = -(plus_first + minus_first) / (weight * params.hbar)
    return SecularTerms(plus_first, minus_first, rate)


def q1_numeric(zo, params, xi=None, n_points=None):
    """
    Amplitude of the first-order Q_rel oscillation per hbar P_rel^(0).

    Re(phi_+|phi_-) = K cos(2 lambda t + dtheta0) with K the modulus of the
    regularized zero-order overlap, so Q_rel^(1) has amplitude
    K / ((gamma_+ gamma_-)^2 2 hbar lambda), negative like ln(2 xi / r0).
    """
    if not params.lambda_coupling > 0:
        raise PhysicalDomainError("The Q_rel oscillation needs lambda > 0.")
    boundary = boundary_zero_order(zo, params, xi=xi, n_points=n_points)
    product = boundary.product("phi_plus", "phi_minus") * params.delta_v(boundary.grid.nodes)
    modulus = abs(integrate_radial(product))
    weight = (zo.gamma_plus * zo.gamma_minus) ** 2
    return -modulus / (weight * 2.0 * params.hbar * params.lambda_coupling)


def product_components(corrections, bra, ket):
    """
    Fourier components of conj(bra) ket with the corrections included.

    Returns:
        dict: k -> RadialField for k in -2..2, the coefficient of
        e^{2 i k lambda t}.
    """
    zo = corrections.zero_order
    bra_f, bra_b = corrections.first_order(bra)
    ket_f, ket_b = corrections.first_order(ket)
    bra0, ket0 = zo.field(bra).conj(), zo.field(ket)
    return {
        0: zo.product(bra, ket) + bra_f.conj() * ket_f + bra_b.conj() * ket_b,
        1: bra0 * ket_f + bra_b.conj() * ket0,
        -1: bra0 * ket_b + bra_f.conj() * ket0,
        2: bra_b.conj() * ket_f,
        -2: bra_f.conj() * ket_b,
    }


@dataclass(frozen=True, eq=False)
class CorrectedModes:
    """
    Mode functions to first order at time t.

    Products include the corrections; gamma_pm, I and u~ keep their
    zero-order values.
    """

    zero_order: object
    corrections: CorrectionFunctions
    t: float

    @property
    def grid(self):
        return self.corrections.grid

    @property
    def gamma_plus(self):
        return self.zero_order.gamma_plus

    @property
    def gamma_minus(self):
        return self.zero_order.gamma_minus

    @property
    def i_integral(self):
        return self.zero_order.i_integral

    @property
    def u_tilde(self):
        return self.zero_order.u_tilde

    @property
    def n_total(self):
        return self.zero_order.n_total

    @property
    def u0(self):
        return self.zero_order.u0

    @property
    def hbar(self):
        return self.zero_order.hbar

    def field(self, name):
        return (self.corrections.zero_order.field(name)
                + self.corrections.correction(name, self.t))

    def product(self, bra, ket):
        phase = 2j * self.corrections.lambda_coupling * self.t
        components = product_components(self.corrections, bra, ket)
        return sum((part * np.exp(k * phase) for k, part in components.items()),
                   RadialField.zeros(self.grid))


def corrected_modes(zo, corrections, t):
    """Mode functions with first-order corrections at time t."""
    return CorrectedModes(zo, corrections, t)
