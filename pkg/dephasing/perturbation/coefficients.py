# perturbation/coefficients.py
import logging
import math
from dataclasses import asdict, dataclass

from django.conf import settings

from core.exceptions import PhysicalDomainError
from hydro.thomas_fermi import stationary_radius

logger = logging.getLogger(__name__)

TOTAL = "total"
IMBALANCE = "imbalance"
VARIANTS = (TOTAL, IMBALANCE)

Q1_COEFFICIENT = 6.0 / 5.0
Q2_COEFFICIENT = 12.0 / 25.0

# constants of the cut overlaps: [ln(2 r0 / xi) - offset]
OSCILLATION_OFFSET = 8.0 / 3.0
SECULAR_OFFSET = 46.0 / 15.0
CROSS_COEFFICIENT = 18.0 / 25.0
SECULAR_COEFFICIENT = 6.0 / 5.0


def perturbation_parameter(params, r0=None):
    """
    v = |dV(r0)| / (hbar lambda) = m |delta_omega_sq| r0^2 / (2 hbar lambda).

    Args:
        params (PhysicalParams): System parameters.
        r0 (float, optional): Thomas-Fermi radius; the stationary one by default.

    Raises:
        PhysicalDomainError: If lambda = 0.
    """
    if not params.lambda_coupling > 0:
        raise PhysicalDomainError("The perturbation parameter needs lambda > 0.")
    if r0 is None:
        r0 = stationary_radius(params)
    return abs(params.delta_v(r0)) / (params.hbar * params.lambda_coupling)


def number_scaling_exponent(params, factor=32.0):
    """Exponent of v in N measured between N and factor * N at stationary r0."""
    if not factor > 1:
        raise ValueError(f"factor must exceed 1, got {factor}.")
    v_low = perturbation_parameter(params)
    v_high = perturbation_parameter(params.replace(n_total=params.n_total * factor))
    if v_low == 0:
        raise PhysicalDomainError("v vanishes; the N scaling is undefined for dV = 0.")
    return math.log(v_high / v_low) / math.log(factor)


def _warn_if_large(v):
    limit = settings.DEPHASING.get("PERTURBATIVE_V_WARNING", 0.3)
    if v > limit:
        logger.warning("v = %.3g exceeds %.3g; first-order results are unreliable", v, limit)


def log_factor(zo, xi=None):
    """ln(2 xi / r0), negative in the Thomas-Fermi regime."""
    xi = zo.xi if xi is None else xi
    return math.log(2.0 * xi / zo.r0)


def q1_amplitude(zo, params, xi=None):
    """
    (6/5) v ln(2 xi / r0) N / sqrt(N_+ N_-), the amplitude of Q_rel^(1).

    Q_rel^(1)(t) is this times sin(2 lambda t + dtheta0) hbar P_rel^(0).
    """
    v = perturbation_parameter(params, zo.r0)
    _warn_if_large(v)
    return (Q1_COEFFICIENT * v * log_factor(zo, xi)
            * zo.n_total / math.sqrt(zo.n_plus * zo.n_minus))


def q2_rate(zo, params, xi=None):
    """
    Growth rate of Q_rel^(2) per hbar P_rel^(0):
    (12/25) v^2 ln(2 xi / r0) N dN / (N_+ N_-) lambda.
    """
    v = perturbation_parameter(params, zo.r0)
    delta_n = zo.n_plus - zo.n_minus
    return (Q2_COEFFICIENT * v ** 2 * log_factor(zo, xi)
            * zo.n_total * delta_n / (zo.n_plus * zo.n_minus) * params.lambda_coupling)


def cut_log(zo, xi=None):
    """ln(2 r0 / xi), the logarithm the cut overlaps grow with."""
    xi = zo.xi if xi is None else xi
    return math.log(2.0 * zo.r0 / xi)


def q1_closed_form(zo, params, xi=None):
    """
    q1_amplitude with the constant of the cut overlap kept:
    -(6/5) v [ln(2 r0 / xi) - 8/3] N / sqrt(N_+ N_-).
    """
    v = perturbation_parameter(params, zo.r0)
    return (-Q1_COEFFICIENT * v * (cut_log(zo, xi) - OSCILLATION_OFFSET)
            * zo.n_total / math.sqrt(zo.n_plus * zo.n_minus))


def q2_closed_form(zo, params, xi=None):
    """
    q2_rate with the constants of the cut overlaps kept.

    Two parts add up per unit v^2 lambda N dN / (N_+ N_-):
    (18/25) [L - 8/3] from the carrier average of the first-order
    oscillations of F[Q_rel, P_rel] and the damping, and
    -(6/5) [L - 46/15] from the constant phi-corrected overlaps
    (phi_+^(1)|phi_-^(0)) + (phi_+^(0)|phi_-^(1)), with L = ln(2 r0 / xi).
    The logarithms add up to the -(12/25) L of q2_rate.
    """
    v = perturbation_parameter(params, zo.r0)
    log = cut_log(zo, xi)
    bracket = (CROSS_COEFFICIENT * (log - OSCILLATION_OFFSET)
               - SECULAR_COEFFICIENT * (log - SECULAR_OFFSET))
    delta_n = zo.n_plus - zo.n_minus
    return (bracket * v ** 2 * zo.n_total * delta_n / (zo.n_plus * zo.n_minus)
            * params.lambda_coupling)


@dataclass(frozen=True)
class PerturbationCoefficients:
    """
    First- and second-order results of the asymmetric trap.

    Attributes:
        v (float): Perturbation parameter, >= 0.
        xi (float): Healing length.
        r0 (float): Thomas-Fermi radius.
        log_factor (float): ln(2 xi / r0).
        q1_amplitude (float): Amplitude of Q_rel^(1) per hbar P_rel^(0).
        q2_rate (float): Growth rate of Q_rel^(2) per hbar P_rel^(0).
        rate_total (float): 1/tau_D with the N^2 / (N_+ N_-) prefactor.
        rate_imbalance (float): 1/tau_D with the N |dN| / (N_+ N_-) prefactor.
        q1_closed_form (float): q1_amplitude with the constant of the cut kept.
        q2_closed_form (float): q2_rate with the constants of the cuts kept.
        variant (str): Which rate `rate` and `tau_d` report.
    """

    v: float
    xi: float
    r0: float
    log_factor: float
    q1_amplitude: float
    q2_rate: float
    rate_total: float
    rate_imbalance: float
    q1_closed_form: float = 0.0
    q2_closed_form: float = 0.0
    variant: str = TOTAL

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"Unknown variant {self.variant!r}; expected one of {VARIANTS}.")

    @property
    def rate(self):
        return self.rate_total if self.variant == TOTAL else self.rate_imbalance

    @staticmethod
    def _time(rate):
        return math.inf if rate == 0 else 1.0 / rate

    @property
    def tau_d(self):
        return self._time(self.rate)

    @property
    def tau_d_total(self):
        return self._time(self.rate_total)

    @property
    def tau_d_imbalance(self):
        return self._time(self.rate_imbalance)

    def as_dict(self):
        data = asdict(self)
        data.update(
            xi_over_r0=self.xi / self.r0,
            tau_d=self.tau_d,
            tau_d_total=self.tau_d_total,
            tau_d_imbalance=self.tau_d_imbalance,
        )
        return data


def dephasing_rate(params, zo, p2_rel0, variant=TOTAL, xi=None):
    """
    Gaussian dephasing rate 1/tau_D = (12/25) v^2 |ln(2 xi / r0)| c lambda sqrt(p2_rel0).

    c is N^2 / (N_+ N_-) for "total" and N |dN| / (N_+ N_-) for
    "imbalance"; both are computed, `variant` picks the reported one.

    Args:
        params (PhysicalParams): System parameters, lambda > 0.
        zo (ZeroOrderSolution): Zero-order solution at the stationary radius.
        p2_rel0 (float): <P_rel^(0) 2>, >= 0; 0 gives tau_D = inf.
        variant (str): "total" or "imbalance".
        xi (float, optional): Healing length, zo.xi by default.

    Returns:
        PerturbationCoefficients: Rates are positive.
    """
    if p2_rel0 < 0:
        raise PhysicalDomainError(f"p2_rel0 must be non-negative, got {p2_rel0}.")
    xi = zo.xi if xi is None else xi
    v = perturbation_parameter(params, zo.r0)
    _warn_if_large(v)
    ln_factor = log_factor(zo, xi)
    n_total, product = zo.n_total, zo.n_plus * zo.n_minus
    base = Q2_COEFFICIENT * v ** 2 * abs(ln_factor) * params.lambda_coupling * math.sqrt(p2_rel0)
    coefficients = PerturbationCoefficients(
        v=v,
        xi=xi,
        r0=zo.r0,
        log_factor=ln_factor,
        q1_amplitude=q1_amplitude(zo, params, xi),
        q2_rate=q2_rate(zo, params, xi),
        rate_total=base * n_total ** 2 / product,
        rate_imbalance=base * n_total * abs(zo.n_plus - zo.n_minus) / product,
        q1_closed_form=q1_closed_form(zo, params, xi),
        q2_closed_form=q2_closed_form(zo, params, xi),
        variant=variant,
    )
    logger.info("dephasing: v=%.4g xi/r0=%.3g tau_D=%.6g (%s)",
                v, xi / zo.r0, coefficients.tau_d, variant)
    return coefficients
