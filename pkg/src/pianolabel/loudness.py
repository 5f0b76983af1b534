"""Gated integrated loudness (ITU-R BS.1770-4 style) and the dataset
normalization scheme: measure each rendition, offset all of them uniformly
so their average hits -23 LUFS, then gain each real recording to its
rendition's target.

The K-weighting pre-filter coefficients are recomputed for the input
sample rate from the parametric design in De Man, "Evaluation of
Implementations of the EBU R128 Loudness Measurement" (2018), which
reproduces the standard's 48 kHz coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

BLOCK_S = 0.400
OVERLAP = 0.75
ABSOLUTE_GATE_LUFS = -70.0
RELATIVE_GATE_LU = -10.0
SILENCE_LUFS = -math.inf


class LoudnessError(ValueError):
    pass


@dataclass(frozen=True)
class LoudnessReport:
    integrated_lufs: float
    gain_applied_db: float
    target_lufs: float
    clipped_samples: int = 0


def k_weighting_coefficients(sample_rate):
    """(b, a) for the two K-weighting stages: high-frequency shelf, then
    high-pass (RLB), designed at the given rate."""
    # stage 1: high shelf
    f0 = 1681.9744509555319
    gain_db = 3.99984385397
    q = 0.7071752369554193
    k = math.tan(math.pi * f0 / sample_rate)
    vh = 10.0 ** (gain_db / 20.0)
    vb = vh ** 0.499666774155
    a0_ = 1.0 + k / q + k * k
    shelf_b = np.array([(vh + vb * k / q + k * k) / a0_,
                        2.0 * (k * k - vh) / a0_,
                        (vh - vb * k / q + k * k) / a0_])
    shelf_a = np.array([1.0, 2.0 * (k * k - 1.0) / a0_, (1.0 - k / q + k * k) / a0_])
    # stage 2: high-pass
    f0 = 38.13547087602444
    q = 0.5003270373238773
    k = math.tan(math.pi * f0 / sample_rate)
    a0_ = 1.0 + k / q + k * k
    hp_b = np.array([1.0, -2.0, 1.0])
    hp_a = np.array([1.0, 2.0 * (k * k - 1.0) / a0_, (1.0 - k / q + k * k) / a0_])
    return (shelf_b, shelf_a), (hp_b, hp_a)


def _k_weight(x, sample_rate):
    (sb, sa), (hb, ha) = k_weighting_coefficients(sample_rate)
    return lfilter(hb, ha, lfilter(sb, sa, x, axis=0), axis=0)


def integrated_loudness(audio, sample_rate) -> float:
    """Gated integrated loudness in LUFS. Mono input is a single full-weight
    channel; stereo channels both get weight 1. Returns -inf for silence."""
    x = np.asarray(audio, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = x.shape[0]
    block = int(round(BLOCK_S * sample_rate))
    hop = int(round(block * (1.0 - OVERLAP)))
    if n < block:
        raise LoudnessError(
            f"input too short for one {BLOCK_S * 1000:.0f} ms gating block")
    y = _k_weight(x, sample_rate)
    weights = np.ones(x.shape[1])  # no surround channels here

    n_blocks = (n - block) // hop + 1
    z = np.empty((n_blocks, x.shape[1]))
    for j in range(n_blocks):
        seg = y[j * hop:j * hop + block]
        z[j] = np.mean(seg * seg, axis=0)
    with np.errstate(divide="ignore"):
        block_lufs = -0.691 + 10.0 * np.log10(np.maximum(z @ weights, 1e-300))

    above_abs = block_lufs > ABSOLUTE_GATE_LUFS
    if not np.any(above_abs):
        return SILENCE_LUFS
    z_abs = z[above_abs].mean(axis=0)
    gamma_r = -0.691 + 10.0 * math.log10(float(z_abs @ weights)) + RELATIVE_GATE_LU
    keep = above_abs & (block_lufs > gamma_r)
    if not np.any(keep):
        return SILENCE_LUFS
    z_final = z[keep].mean(axis=0)
    return -0.691 + 10.0 * math.log10(float(z_final @ weights))


def compute_targets(rendition_loudness, global_target=-23.0):
    """Uniform offset so the renditions' mean loudness equals the global
    target; each file's target preserves its deviation from the mean."""
    values = [float(v) for v in rendition_loudness]
    if not values:
        raise LoudnessError("empty loudness list")
    if not all(math.isfinite(v) for v in values):
        raise LoudnessError("non-finite loudness value")
    offset = global_target - sum(values) / len(values)
    return [v + offset for v in values]


def normalize_to(audio, measured, target, max_gain_db=40.0):
    """Scale audio by the linear gain taking measured loudness to the target.
    No limiting; clipping is counted and reported, not prevented."""
    if not math.isfinite(measured):
        raise LoudnessError("measured loudness is not finite")
    gain_db = target - measured
    if gain_db > max_gain_db:
        raise LoudnessError(
            f"required gain {gain_db:.1f} dB exceeds {max_gain_db} dB; "
            "suspected measurement fault")
    x = np.asarray(audio, dtype=np.float64)
    y = x * 10.0 ** (gain_db / 20.0) if gain_db != 0.0 else x.copy()
    clipped = int(np.count_nonzero(np.abs(y) > 1.0))
    return y, LoudnessReport(measured, gain_db, target, clipped)
