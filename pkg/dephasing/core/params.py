# core/params.py
import logging
import math
from dataclasses import dataclass, field, replace

from scipy import constants

from .serializers import PhysicalParamsSerializer

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UnitSystem:
    """
    Size of the internal units (hbar = m = omega_m = 1) in the input units.

    Attributes:
        mass (float): Atomic mass.
        length (float): Oscillator length sqrt(hbar / (m omega_m)).
        time (float): 1 / omega_m.
        hbar (float): Reduced Planck constant in the input unit system.
        label (str): "si" or "trap".
    """

    mass: float = 1.0
    length: float = 1.0
    time: float = 1.0
    hbar: float = 1.0
    label: str = "trap"

    @property
    def energy(self):
        return self.hbar / self.time


@dataclass(frozen=True)
class PhysicalParams:
    """
    Experimental constants of the two-condensate system in internal units.

    All values are dimensionless: hbar = m = omega_m = 1 with
    omega_m = sqrt((omega_a**2 + omega_b**2) / 2). `units` remembers the
    conversion so that `to_physical` reproduces the raw inputs.
    """

    n_total: float
    omega_a: float
    omega_b: float
    scattering_length: float = 0.0
    lambda_coupling: float = 0.0
    mass: float = 1.0
    hbar: float = 1.0
    units: UnitSystem = field(default_factory=UnitSystem)

    @property
    def u0(self):
        """Contact coupling u0 = 4 pi hbar^2 a_SC / m."""
        return 4.0 * math.pi * self.hbar ** 2 * self.scattering_length / self.mass

    @property
    def omega_mean_sq(self):
        return (self.omega_a ** 2 + self.omega_b ** 2) / 2.0

    @property
    def omega_mean(self):
        return math.sqrt(self.omega_mean_sq)

    @property
    def delta_omega_sq(self):
        """(omega_a**2 - omega_b**2) / 2, so that dV(r) = m * delta_omega_sq * r**2 / 2."""
        return (self.omega_a ** 2 - self.omega_b ** 2) / 2.0

    @property
    def u0_physical(self):
        """u0 expressed in the input units (energy times volume)."""
        return self.u0 * self.units.energy * self.units.length ** 3

    def potential_mean(self, r):
        return 0.5 * self.mass * self.omega_mean_sq * r ** 2

    def delta_v(self, r):
        return 0.5 * self.mass * self.delta_omega_sq * r ** 2

    def potential_a(self, r):
        return self.potential_mean(r) + self.delta_v(r)

    def potential_b(self, r):
        return self.potential_mean(r) - self.delta_v(r)

    def replace(self, **changes):
        """Returns a copy with the given internal-unit fields changed."""
        return replace(self, **changes)

    def with_delta_omega_sq(self, delta_omega_sq):
        """
        Returns a copy whose traps are split by `delta_omega_sq` around the
        same mean squared frequency.
        """
        mean_sq = self.omega_mean_sq
        return replace(
            self,
            omega_a=math.sqrt(mean_sq + delta_omega_sq),
            omega_b=math.sqrt(mean_sq - delta_omega_sq),
        )

    def to_physical(self):
        """
        Converts back to the unit system the parameters were given in.

        Returns:
            dict: Raw inputs accepted by `make_params`.
        """
        u = self.units
        return {
            "units": u.label,
            "n_total": self.n_total,
            "mass": self.mass * u.mass,
            "omega_a": self.omega_a / u.time,
            "omega_b": self.omega_b / u.time,
            "scattering_length": self.scattering_length * u.length,
            "lambda_coupling": self.lambda_coupling / u.time,
        }


def make_params(raw):
    """
    Validates raw inputs and converts them to internal units.

    Args:
        raw (Mapping): Keys of `PhysicalParamsSerializer`.

    Returns:
        PhysicalParams: Validated parameters with hbar = m = omega_m = 1.

    Raises:
        rest_framework.serializers.ValidationError: If a value is out of
            range; the error detail is keyed by the offending field.
    """
    serializer = PhysicalParamsSerializer(data=dict(raw))
    serializer.is_valid(raise_exception=True)
    data = serializer.validated_data

    omega_a, omega_b = data["omega_a"], data["omega_b"]
    mean_sq = (omega_a ** 2 + omega_b ** 2) / 2.0
    if data.get("delta_omega_sq") is not None:
        omega_a = math.sqrt(mean_sq + data["delta_omega_sq"])
        omega_b = math.sqrt(mean_sq - data["delta_omega_sq"])
    omega_m = math.sqrt(mean_sq)

    hbar = constants.hbar if data["units"] == "si" else 1.0
    mass = data["mass"]
    units = UnitSystem(
        mass=mass,
        length=math.sqrt(hbar / (mass * omega_m)),
        time=1.0 / omega_m,
        hbar=hbar,
        label=data["units"],
    )
    params = PhysicalParams(
        n_total=data["n_total"],
        omega_a=omega_a * units.time,
        omega_b=omega_b * units.time,
        scattering_length=data["scattering_length"] / units.length,
        lambda_coupling=data["lambda_coupling"] * units.time,
        units=units,
    )
    logger.debug(
        "params: N=%g lambda=%g u0=%g delta_omega_sq=%g (internal units)",
        params.n_total, params.lambda_coupling, params.u0, params.delta_omega_sq,
    )
    return params
