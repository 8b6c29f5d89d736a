"""Small signal statistics shared by separation, linkage, and features."""

from __future__ import annotations

import numpy as np
import scipy.fft


def mean_square(samples: np.ndarray) -> float:
    """Mean squared amplitude (the pipeline's energy measure)."""
    if len(samples) == 0:
        return 0.0
    return float(np.mean(np.square(samples, dtype=np.float64)))


def rms(samples: np.ndarray) -> float:
    return float(np.sqrt(mean_square(samples)))


def zero_crossing_rate(samples: np.ndarray) -> float:
    """Fraction of adjacent sample pairs whose signs differ, in [0, 1]."""
    if len(samples) < 2:
        return 0.0
    signs = np.signbit(samples)
    return float(np.count_nonzero(signs[1:] != signs[:-1]) / (len(samples) - 1))


def spectral_centroid(samples: np.ndarray, sample_rate: int) -> float:
    """Power-weighted mean frequency in Hz; 0.0 for silence."""
    if len(samples) == 0:
        return 0.0
    spectrum = np.abs(scipy.fft.rfft(np.asarray(samples, dtype=np.float32)))
    power = np.square(spectrum, dtype=np.float64)
    total = power.sum()
    if total <= 0.0:
        return 0.0
    freqs = scipy.fft.rfftfreq(len(samples), d=1.0 / sample_rate)
    return float((freqs * power).sum() / total)


def frame_energies(samples: np.ndarray, frames: int) -> np.ndarray:
    """Mean squared amplitude over ``frames`` equal time slices."""
    if frames < 1:
        raise ValueError("frames must be >= 1")
    out = np.zeros(frames, dtype=np.float64)
    n = len(samples)
    if n == 0:
        return out
    edges = np.linspace(0, n, frames + 1).astype(int)
    for i in range(frames):
        seg = samples[edges[i] : edges[i + 1]]
        out[i] = mean_square(seg) if len(seg) else 0.0
    return out
