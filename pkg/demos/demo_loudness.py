"""Integrated loudness and -23 LUFS batch normalization.

Three synthetic "recordings" at different levels are measured with the
K-weighted gated meter, assigned targets whose mean is exactly -23 LUFS
while preserving their relative dynamics, and gain-normalized.
"""

import math

import numpy as np

from pianolabel.loudness import compute_targets, integrated_loudness, normalize_to

SR = 48000


def tone(dbfs_rms, dur=5.0, freq=997.0):
    amp = math.sqrt(2.0) * 10.0 ** (dbfs_rms / 20.0)
    t = np.arange(int(dur * SR)) / SR
    return amp * np.sin(2 * np.pi * freq * t)


def pink_noise(rng, dur=5.0):
    n = int(dur * SR)
    spectrum = np.fft.rfft(rng.standard_normal(n))
    freqs = np.fft.rfftfreq(n, 1 / SR)
    x = np.fft.irfft(spectrum / np.sqrt(np.maximum(freqs, 1.0)), n)
    return 0.2 * x / np.abs(x).max()


def main():
    rng = np.random.default_rng(0)
    recordings = {"quiet tone": tone(-30.0), "loud tone": tone(-14.0),
                  "pink noise": pink_noise(rng)}

    measured = {name: integrated_loudness(x, SR) for name, x in recordings.items()}
    targets = compute_targets(list(measured.values()))
    print(f"target mean: {np.mean(targets):.6f} LUFS (relative dynamics kept)\n")

    for (name, x), target in zip(recordings.items(), targets):
        y, report = normalize_to(x, measured[name], target)
        check = integrated_loudness(y, SR)
        print(f"{name:10s}  measured {measured[name]:7.2f} LUFS  "
              f"target {target:7.2f}  gain {report.gain_applied_db:+6.2f} dB  "
              f"re-measured {check:7.2f}  clipped {report.clipped_samples}")


if __name__ == "__main__":
    main()
