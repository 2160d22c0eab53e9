import math

import numpy as np


def rk4_step(rhs, t, y, h):
    """One classical fourth-order Runge-Kutta step of y' = rhs(t, y)."""
    k1 = rhs(t, y)
    k2 = rhs(t + h / 2, y + h / 2 * k1)
    k3 = rhs(t + h / 2, y + h / 2 * k2)
    k4 = rhs(t + h, y + h * k3)
    return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def integrate_ode(rhs, y0, times, max_step):
    """
    Integrates y' = rhs(t, y) with fixed RK4 steps, sampling at `times`.

    Each interval between consecutive output times is split into the
    smallest number of equal steps not exceeding `max_step`, so the result
    depends only on the inputs. y may have any shape.

    Args:
        rhs (callable): Right-hand side returning an array shaped like y.
        y0 (array_like): Initial value at times[0].
        times (array_like): Strictly increasing output times.
        max_step (float): Largest internal step.

    Returns:
        ndarray: Samples of shape (len(times),) + y0.shape.

    Raises:
        ValueError: If times are not strictly increasing or max_step <= 0.
    """
    times = np.asarray(times, dtype=float)
    if max_step <= 0:
        raise ValueError("max_step must be positive.")
    if times.ndim != 1 or np.any(np.diff(times) <= 0):
        raise ValueError("Output times must be strictly increasing.")
    y = np.array(y0)
    out = np.empty((len(times),) + y.shape, dtype=y.dtype)
    out[0] = y
    for k in range(1, len(times)):
        t0, t1 = times[k - 1], times[k]
        n_steps = max(1, math.ceil((t1 - t0) / max_step - 1e-12))
        h = (t1 - t0) / n_steps
        for j in range(n_steps):
            y = rk4_step(rhs, t0 + j * h, y, h)
        out[k] = y
    return out


def josephson_step(lambda_coupling, steps_per_period, fallback=1.0):
    """
    Largest step giving `steps_per_period` steps per Josephson period pi / lambda.

    `fallback` is the time scale used when lambda = 0 (one trap period in
    internal units).
    """
    period = math.pi / lambda_coupling if lambda_coupling > 0 else fallback * 2 * math.pi
    return period / steps_per_period
