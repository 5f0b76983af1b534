"""WAV I/O and basic signal helpers (downmix, resampling)."""

from __future__ import annotations

import numpy as np
from scipy.io import wavfile
from scipy.signal import resample_poly


def load_wav(path):
    """Read a WAV file (PCM 16/24/32-bit or float) as float arrays in [-1, 1].

    Returns (samples, sample_rate); samples shape is (n,) for mono or
    (n, channels) otherwise.
    """
    sr, data = wavfile.read(path)
    if data.dtype == np.int16:
        x = data.astype(np.float64) / 32768.0
    elif data.dtype == np.int32:
        x = data.astype(np.float64) / 2147483648.0
    elif data.dtype == np.uint8:
        x = (data.astype(np.float64) - 128.0) / 128.0
    else:
        x = data.astype(np.float64)
    return x, sr


def save_wav(path, x, sr, dtype="float32"):
    x = np.asarray(x)
    if dtype == "float32":
        wavfile.write(path, sr, x.astype(np.float32))
    elif dtype == "int16":
        y = np.clip(np.round(x * 32767.0), -32768, 32767).astype(np.int16)
        wavfile.write(path, sr, y)
    else:
        raise ValueError(f"unsupported dtype {dtype}")


def downmix(x):
    """Mean-downmix multi-channel audio to mono."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return x
    return x.mean(axis=1)


def resample(x, sr_in, sr_out):
    """Windowed-sinc (polyphase FIR) resampling."""
    if sr_in == sr_out:
        return np.asarray(x, dtype=np.float64)
    from math import gcd
    g = gcd(int(sr_in), int(sr_out))
    return resample_poly(np.asarray(x, dtype=np.float64), sr_out // g, sr_in // g)
