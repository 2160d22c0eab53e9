import math

import numpy as np
from scipy import fft


def frequency_resolution(times):
    """Angular-frequency bin width of an rFFT over `times`."""
    times = np.asarray(times, dtype=float)
    return 2 * math.pi / (len(times) * (times[1] - times[0]))


def dominant_frequency(times, signal):
    """
    Angular frequency of the strongest non-constant rFFT component.

    Args:
        times (array_like): Equally spaced sample times.
        signal (array_like): Real samples.

    Returns:
        float: 2 pi k / (n dt) for the peak bin k >= 1.
    """
    signal = np.asarray(signal, dtype=float)
    spectrum = np.abs(fft.rfft(signal - signal.mean()))
    peak = 1 + int(np.argmax(spectrum[1:]))
    return peak * frequency_resolution(times)
