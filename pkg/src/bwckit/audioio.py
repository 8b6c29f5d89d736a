"""WAV reading/writing and sample-format conversion helpers.

The pipeline's canonical audio form is mono 16 kHz 16-bit linear PCM.
Samples are held in memory as float32 in [-1, 1); int16 <-> float32
conversion is exact in both directions (every int16 value divided by
32768 is representable in float32), so a canonical file survives a
read/write round trip bit-identically.
"""

from __future__ import annotations

import wave
from math import gcd
from pathlib import Path

import numpy as np
from scipy.signal import resample_poly

CANONICAL_RATE = 16_000
CANONICAL_CHANNELS = 1
CANONICAL_SAMPWIDTH = 2  # bytes, 16-bit PCM

_INT16_SCALE = 32768.0


class AudioFormatError(ValueError):
    """Raised for unreadable or unsupported audio containers."""


def int16_to_float(samples: np.ndarray) -> np.ndarray:
    # multiply by the exact power of two in place: same bits as division,
    # without a second full-size temporary
    out = samples.astype(np.float32)
    out *= np.float32(1.0 / _INT16_SCALE)
    return out


def float_to_int16(samples: np.ndarray) -> np.ndarray:
    scaled = np.round(np.asarray(samples, dtype=np.float64) * _INT16_SCALE)
    return np.clip(scaled, -32768, 32767).astype(np.int16)


def read_wav(path: str | Path) -> tuple[np.ndarray, int, int]:
    """Read a RIFF/WAV file.

    Returns (samples, sample_rate, channels) where samples is a float32
    array of shape (frames,) for mono or (frames, channels) otherwise.
    """
    try:
        with wave.open(str(path), "rb") as wf:
            rate = wf.getframerate()
            channels = wf.getnchannels()
            sampwidth = wf.getsampwidth()
            frames = wf.readframes(wf.getnframes())
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioFormatError(f"cannot read WAV file {path}: {exc}") from exc

    if sampwidth == 2:
        data = np.frombuffer(frames, dtype="<i2")
        floats = int16_to_float(data)
    elif sampwidth == 1:
        data = np.frombuffer(frames, dtype=np.uint8).astype(np.int16) - 128
        floats = (data.astype(np.float32)) / 128.0
    elif sampwidth == 4:
        data = np.frombuffer(frames, dtype="<i4")
        floats = (data.astype(np.float64) / 2147483648.0).astype(np.float32)
    else:
        raise AudioFormatError(f"unsupported sample width {sampwidth} in {path}")

    if channels > 1:
        floats = floats.reshape(-1, channels)
    return floats, rate, channels


def write_wav(path: str | Path, samples: np.ndarray, rate: int = CANONICAL_RATE) -> None:
    """Write float samples as 16-bit PCM WAV (mono or interleaved 2-D)."""
    samples = np.asarray(samples)
    channels = 1 if samples.ndim == 1 else samples.shape[1]
    pcm = float_to_int16(samples.reshape(-1))
    with wave.open(str(path), "wb") as wf:
        wf.setnchannels(channels)
        wf.setsampwidth(CANONICAL_SAMPWIDTH)
        wf.setframerate(rate)
        wf.writeframes(pcm.tobytes())


def probe_wav_duration(path: str | Path) -> float:
    """Duration in seconds from the WAV header without reading samples."""
    try:
        with wave.open(str(path), "rb") as wf:
            rate = wf.getframerate()
            if rate <= 0:
                raise AudioFormatError(f"non-positive sample rate in {path}")
            return wf.getnframes() / rate
    except (wave.Error, EOFError, OSError) as exc:
        raise AudioFormatError(f"cannot probe {path}: {exc}") from exc


def probe_mp4_duration(path: str | Path) -> float:
    """Duration in seconds from an MP4 container's mvhd box."""
    data = Path(path).read_bytes()
    idx = data.find(b"mvhd")
    if idx < 0 or idx + 24 > len(data):
        raise AudioFormatError(f"no mvhd box in {path}")
    version = data[idx + 4]
    if version == 1:
        timescale = int.from_bytes(data[idx + 24 : idx + 28], "big")
        duration = int.from_bytes(data[idx + 28 : idx + 36], "big")
    else:
        timescale = int.from_bytes(data[idx + 16 : idx + 20], "big")
        duration = int.from_bytes(data[idx + 20 : idx + 24], "big")
    if timescale <= 0:
        raise AudioFormatError(f"bad mvhd timescale in {path}")
    return duration / timescale


def downmix(samples: np.ndarray) -> np.ndarray:
    """Average interleaved channels into a mono float32 stream."""
    if samples.ndim == 1:
        return samples.astype(np.float32, copy=False)
    return samples.mean(axis=1, dtype=np.float64).astype(np.float32)


def resample(samples: np.ndarray, src_rate: int, dst_rate: int = CANONICAL_RATE) -> np.ndarray:
    if src_rate == dst_rate:
        return samples.astype(np.float32, copy=False)
    g = gcd(src_rate, dst_rate)
    out = resample_poly(samples.astype(np.float64), dst_rate // g, src_rate // g)
    return out.astype(np.float32)
