# moments/propagation.py
import logging
import math
from dataclasses import dataclass

import numpy as np
from django.conf import settings

from core.exceptions import FitError, PhysicalDomainError
from core.integrators import integrate_ode, josephson_step

from .generator import OPERATORS, GeneratorMatrix

logger = logging.getLogger(__name__)

PSD_FLOOR = 1e-10


def _check_covariance(cov):
    if not np.allclose(cov, cov.T, rtol=1e-12, atol=1e-14 * max(1.0, np.abs(cov).max())):
        raise PhysicalDomainError("Covariance must be symmetric.")
    trace = float(np.trace(cov))
    smallest = float(np.linalg.eigvalsh(cov).min())
    if smallest < -PSD_FLOOR * max(abs(trace), 1e-300) or np.any(np.diag(cov) < 0):
        raise PhysicalDomainError(
            f"Covariance is not positive semidefinite (smallest eigenvalue {smallest:g}).",
            {"smallest_eigenvalue": smallest, "trace": trace},
        )


@dataclass(frozen=True, eq=False)
class MomentState:
    """
    Means and symmetrized second moments of (P_tot, Q_tot, P_rel, Q_rel).

    Attributes:
        mean (ndarray): Shape (4,).
        cov (ndarray): Symmetric positive semidefinite (4, 4) covariance.
    """

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float)
        cov = np.array(self.cov, dtype=float)
        if mean.shape != (4,) or cov.shape != (4, 4):
            raise ValueError("MomentState needs a 4-vector and a 4x4 covariance.")
        _check_covariance(cov)
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    def variance(self, name):
        index = OPERATORS.index(name)
        return float(self.cov[index, index])

    def second_moment(self, name):
        """<X^2> = Var(X) + <X>^2."""
        index = OPERATORS.index(name)
        return float(self.cov[index, index] + self.mean[index] ** 2)


def initial_moments(mean=(0.0, 0.0, 0.0, 0.0), var_p_tot=0.0, var_q_tot=0.0,
                    var_p_rel=1.0, var_q_rel=None, hbar=1.0):
    """
    Uncorrelated initial moments.

    Var(P_rel) = 1 and Var(Q_rel) = hbar^2 / 4 unless given.
    """
    if var_q_rel is None:
        var_q_rel = hbar ** 2 / 4
    cov = np.diag([var_p_tot, var_q_tot, var_p_rel, var_q_rel]).astype(float)
    return MomentState(np.asarray(mean, dtype=float), cov)


@dataclass(frozen=True, eq=False)
class MomentTrajectory:
    times: np.ndarray
    means: np.ndarray
    covs: np.ndarray

    def state(self, index):
        return MomentState(self.means[index], self.covs[index])

    def states(self):
        return [self.state(k) for k in range(len(self.times))]

    def mean_of(self, name):
        return self.means[:, OPERATORS.index(name)]

    def variance_of(self, name):
        index = OPERATORS.index(name)
        return self.covs[:, index, index]

    def second_moment_of(self, name):
        return self.variance_of(name) + self.mean_of(name) ** 2

    def as_rows(self, hbar=1.0):
        """
        Rows (t, 4 means, 4 variances, 6 covariances, correlation_decay).

        Covariances are ordered by row, upper triangle.
        """
        upper = np.triu_indices(4, k=1)
        variances = np.diagonal(self.covs, axis1=1, axis2=2)
        off_diagonal = self.covs[:, upper[0], upper[1]]
        decay = correlation_decay(self, hbar=hbar)
        return np.column_stack([self.times, self.means, variances, off_diagonal, decay])


def column_names():
    upper = np.triu_indices(4, k=1)
    return (
        ["t"]
        + [f"mean_{name}" for name in OPERATORS]
        + [f"var_{name}" for name in OPERATORS]
        + [f"cov_{OPERATORS[i]}_{OPERATORS[j]}" for i, j in zip(*upper)]
        + ["correlation_decay"]
    )


def _as_source(generator):
    if isinstance(generator, GeneratorMatrix):
        return lambda t: generator
    return generator


def propagate_moments(m0, generator, times, max_step=None):
    """
    Integrates dm/dt = F m and dSigma/dt = F Sigma + Sigma F^T.

    Args:
        m0 (MomentState): State at times[0].
        generator: A constant `GeneratorMatrix`, or a callable t -> GeneratorMatrix
            such as `GeneratorSource`.
        times (array_like): Strictly increasing output times.
        max_step (float): Largest RK4 step; defaults to the source's
            `max_step()` (at least 200 steps per pi/lambda), else one
            trap period over STEPS_PER_PERIOD.

    Returns:
        MomentTrajectory: Samples at `times`.
    """
    if not isinstance(m0, MomentState):
        raise TypeError("m0 must be a MomentState.")
    source = _as_source(generator)
    if max_step is None:
        if hasattr(generator, "max_step"):
            max_step = generator.max_step()
        else:
            max_step = josephson_step(0.0, settings.DEPHASING["STEPS_PER_PERIOD"])

    def rhs(t, y):
        f = source(t).f
        mean, cov = y[:4], y[4:].reshape(4, 4)
        drift = f @ cov
        return np.concatenate([f @ mean, (drift + drift.T).ravel()])

    y0 = np.concatenate([m0.mean, m0.cov.ravel()])
    samples = integrate_ode(rhs, y0, times, max_step)
    covs = samples[:, 4:].reshape(-1, 4, 4)
    covs = (covs + np.transpose(covs, (0, 2, 1))) / 2
    logger.debug("moments: %d samples up to t = %g", len(samples), np.asarray(times)[-1])
    return MomentTrajectory(np.asarray(times, dtype=float), samples[:, :4], covs)


def correlation_decay(trajectory, hbar=1.0, gaussian_state=True):
    """
    exp(-<Q_rel^2>(t) / hbar^2), normalized to its value at the first time.

    Raises:
        PhysicalDomainError: If the caller does not assert a Gaussian state.
    """
    if not gaussian_state:
        raise PhysicalDomainError("The decay formula holds for Gaussian states only.")
    second = trajectory.second_moment_of("Q_rel")
    return np.exp(-(second - second[0]) / hbar ** 2)


def fit_gaussian_decay(times, values):
    """
    Decay time tau of values ~ c exp(-t^2 / tau^2).

    Least squares of ln(values) against t^2.

    Raises:
        FitError: With fewer than three points, non-positive values or a
            non-decaying fit.
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < 3 or len(times) != len(values):
        raise FitError("A Gaussian fit needs at least three matching samples.")
    if np.any(values <= 0):
        raise FitError("Gaussian fit needs positive values.")
    intercept, slope = np.polynomial.polynomial.polyfit(times ** 2, np.log(values), 1)
    if not slope < 0:
        raise FitError("Values do not decay.", {"slope": float(slope)})
    return 1.0 / math.sqrt(-slope)
