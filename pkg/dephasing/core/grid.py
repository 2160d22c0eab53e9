# core/grid.py
import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .exceptions import GridMismatchError, InvalidFieldError


def _simpson_weights(n_points, step):
    """Composite Simpson weights for `n_points` (odd) equally spaced samples."""
    weights = np.full(n_points, 2.0)
    weights[1::2] = 4.0
    weights[0] = weights[-1] = 1.0
    return weights * step / 3.0


def _frozen(array):
    array = np.asarray(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """
    Radial nodes on [0, r_max] with weights for the integral of f(r) 4 pi r^2 dr.

    `uniform` spaces the nodes evenly (composite Simpson, weight 0 at the
    origin); `trapezoid` uses the same nodes with trapezoidal weights.
    `graded` maps a uniform s in [0, 1] through r = r_max s (2 - s), which
    clusters nodes next to r_max where integrands vary on the healing-length
    scale.

    Attributes:
        r_max (float): Outer radius.
        n_points (int): Number of nodes, odd.
        nodes (ndarray): Increasing radii from 0 to r_max.
        weights (ndarray): Quadrature weights including 4 pi r^2.
        kind (str): "uniform", "trapezoid" or "graded".
    """

    r_max: float
    n_points: int
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "uniform"

    @classmethod
    def uniform(cls, r_max, n_points):
        """
        Builds an evenly spaced grid.

        Args:
            r_max (float): Outer radius, > 0.
            n_points (int): Odd number of nodes, at least 3.

        Raises:
            ValueError: If `r_max` <= 0 or `n_points` is even or < 3.
        """
        cls._check(r_max, n_points)
        nodes, step = np.linspace(0.0, r_max, n_points, retstep=True)
        weights = _simpson_weights(n_points, step) * 4.0 * math.pi * nodes ** 2
        return cls(r_max, n_points, _frozen(nodes), _frozen(weights), "uniform")

    @classmethod
    def trapezoid(cls, r_max, n_points):
        """
        Evenly spaced nodes with trapezoidal weights.

        The weights match the discrete l2 norm of u = r psi, which the
        Gross-Pitaevskii propagators conserve exactly.
        """
        cls._check(r_max, n_points)
        nodes, step = np.linspace(0.0, r_max, n_points, retstep=True)
        weights = np.full(n_points, step)
        weights[0] = weights[-1] = step / 2
        weights = weights * 4.0 * math.pi * nodes ** 2
        return cls(r_max, n_points, _frozen(nodes), _frozen(weights), "trapezoid")

    @classmethod
    def graded(cls, r_max, n_points):
        """Builds a grid refined quadratically towards `r_max`."""
        cls._check(r_max, n_points)
        s, step = np.linspace(0.0, 1.0, n_points, retstep=True)
        nodes = r_max * s * (2.0 - s)
        nodes[-1] = r_max
        jacobian = 2.0 * r_max * (1.0 - s)
        weights = _simpson_weights(n_points, step) * jacobian * 4.0 * math.pi * nodes ** 2
        return cls(r_max, n_points, _frozen(nodes), _frozen(weights), "graded")

    @staticmethod
    def _check(r_max, n_points):
        if not r_max > 0:
            raise ValueError(f"r_max must be positive, got {r_max}.")
        if n_points < 3 or n_points % 2 == 0:
            raise ValueError(f"Simpson quadrature needs an odd n_points >= 3, got {n_points}.")

    @property
    def volume(self):
        return float(np.sum(self.weights))

    def same_as(self, other):
        return self is other or (
            self.kind == other.kind
            and self.n_points == other.n_points
            and self.r_max == other.r_max
        )


@dataclass(frozen=True, eq=False)
class RadialField:
    """
    Complex samples of a spherically symmetric function on a `RadialGrid`.

    Arithmetic between fields requires a shared grid; scalars broadcast.
    """

    grid: RadialGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.array(self.values, dtype=complex)
        if values.shape != (self.grid.n_points,):
            raise InvalidFieldError(
                f"Field has {values.shape} samples, grid has {self.grid.n_points} nodes."
            )
        if not np.all(np.isfinite(values)):
            raise InvalidFieldError("Field samples must be finite.")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def zeros(cls, grid):
        return cls(grid, np.zeros(grid.n_points, dtype=complex))

    @classmethod
    def from_function(cls, grid, function):
        return cls(grid, function(grid.nodes))

    def _other_values(self, other):
        if isinstance(other, RadialField):
            if not self.grid.same_as(other.grid):
                raise GridMismatchError("Fields live on different radial grids.")
            return other.values
        return other

    def __add__(self, other):
        return RadialField(self.grid, self.values + self._other_values(other))

    __radd__ = __add__

    def __sub__(self, other):
        return RadialField(self.grid, self.values - self._other_values(other))

    def __mul__(self, other):
        return RadialField(self.grid, self.values * self._other_values(other))

    __rmul__ = __mul__

    def __neg__(self):
        return RadialField(self.grid, -self.values)

    def conj(self):
        return RadialField(self.grid, np.conj(self.values))

    def abs2(self):
        return RadialField(self.grid, np.abs(self.values) ** 2)

    def integrate(self):
        return integrate_radial(self)


def integrate_radial(f):
    """
    Integrates a field against 4 pi r^2 dr with the grid's weights.

    Args:
        f (RadialField): The integrand.

    Returns:
        float or complex: float when every sample is real.
    """
    total = np.dot(f.grid.weights, f.values)
    if not np.any(f.values.imag):
        return float(total.real)
    return complex(total)


def cumulative_radial(f):
    """
    Running integral of f 4 pi r^2 dr from the origin to every node.

    Used to read off partial integrals at radii between nodes.
    """
    if f.grid.kind == "graded":
        x = np.linspace(0.0, 1.0, f.grid.n_points)
        jacobian = 2.0 * f.grid.r_max * (1.0 - x)
        integrand = f.values * jacobian * 4.0 * math.pi * f.grid.nodes ** 2
    else:
        x = f.grid.nodes
        integrand = f.values * 4.0 * math.pi * x ** 2
    real = integrate.cumulative_simpson(integrand.real, x=x, initial=0.0)
    imag = integrate.cumulative_simpson(integrand.imag, x=x, initial=0.0)
    return real + 1j * imag


def field_norm(psi, n_total):
    """Atom number carried by `psi`: the integral of N |psi|^2."""
    return n_total * integrate_radial(psi.abs2())
