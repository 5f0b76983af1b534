"""Audio-MIDI fine alignment: constant-Q features, Sakoe-Chiba-banded DTW,
and application of the warp path to MIDI event times.

The MIDI side is rendered to audio (here with a simple additive sinusoidal
renderer), both signals are turned into log-magnitude constant-Q features
at a 64-sample hop (~3 ms), and DTW constrained to a +-2.5 s band around
the scaled diagonal finds the minimal-cost monotone correspondence.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field, replace

import numpy as np
from numba import njit
from scipy.signal import oaconvolve

from .midi import NoteEvent, PedalEvent, Performance

SAMPLE_RATE = 22050
HOP = 64
N_BINS = 84
FMIN = 32.70319566257483  # C1
DB_FLOOR = -80.0


class AlignmentError(RuntimeError):
    pass


@dataclass
class FeatureSequence:
    values: np.ndarray          # frames x bins, log-magnitude dB in [-80, 0]
    sample_rate: int = SAMPLE_RATE
    hop: int = HOP
    fmin: float = FMIN

    @property
    def n_frames(self):
        return self.values.shape[0]

    @property
    def frames_per_second(self):
        return self.sample_rate / self.hop


def bin_frequency(k, fmin=FMIN):
    return fmin * 2.0 ** (k / 12.0)


def extract_features(audio, sample_rate=SAMPLE_RATE, hop=HOP, n_bins=N_BINS,
                     fmin=FMIN) -> FeatureSequence:
    """Direct-kernel constant-Q transform, 12 bins/octave, log magnitude
    normalized so the sequence maximum sits at 0 dB (floor -80 dB)."""
    x = np.asarray(audio, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected non-empty mono audio")
    n_frames = int(np.ceil(x.size / hop))
    q = 1.0 / (2.0 ** (1.0 / 12.0) - 1.0)
    mags = np.empty((n_frames, n_bins))
    centers = np.arange(n_frames) * hop
    for k in range(n_bins):
        fk = bin_frequency(k, fmin)
        n_k = int(round(q * sample_rate / fk)) | 1  # odd length for exact centering
        n_t = np.arange(n_k) - n_k // 2
        window = np.hanning(n_k)
        kernel = window * np.exp(2j * np.pi * fk * n_t / sample_rate) / window.sum()
        # correlation via convolution with the reversed conjugate kernel
        y = oaconvolve(x, np.conj(kernel[::-1]), mode="same")
        mags[:, k] = np.abs(y[np.minimum(centers, x.size - 1)])
    peak = mags.max()
    if peak <= 0.0:
        db = np.full_like(mags, DB_FLOOR)
    else:
        with np.errstate(divide="ignore"):
            db = 20.0 * np.log10(mags / peak)
        db = np.maximum(db, DB_FLOOR)
    return FeatureSequence(db.astype(np.float64), sample_rate, hop, fmin)


# ---------------------------------------------------------------------------
# banded DTW


@dataclass
class WarpPath:
    i_idx: np.ndarray
    j_idx: np.ndarray
    band_radius: int

    def __len__(self):
        return self.i_idx.size

    def validate(self, n, m):
        ii, jj = self.i_idx, self.j_idx
        if ii[0] != 0 or jj[0] != 0 or ii[-1] != n - 1 or jj[-1] != m - 1:
            raise AlignmentError("warp path endpoints invalid")
        di, dj = np.diff(ii), np.diff(jj)
        steps_ok = np.all((di >= 0) & (dj >= 0) & (di <= 1) & (dj <= 1) & (di + dj >= 1))
        if not steps_ok:
            raise AlignmentError("warp path contains an invalid step")
        if np.any(np.abs(ii * m / n - jj) > self.band_radius + 1e-9):
            raise AlignmentError("warp path leaves the Sakoe-Chiba band")


def band_radius_frames(band_s, sample_rate=SAMPLE_RATE, hop=HOP):
    """Band half-width in frames; 2.5 s at 22050/64 gives exactly 861."""
    return int(band_s * sample_rate / hop)


_INF = np.inf


@njit(cache=True)
def _band_lo_hi(i, n, m, r):
    c = i * m / n
    lo = int(np.ceil(c - r))
    hi = int(np.floor(c + r))
    if lo < 0:
        lo = 0
    if hi > m - 1:
        hi = m - 1
    return lo, hi


@njit(cache=True)
def _dtw_band(xn, yn, r):
    """DP over the band; returns (total cost, packed 2-bit step codes).

    Step codes per cell: 0=diagonal, 1=from (i-1,j), 2=from (i,j-1), 3=unset.
    Codes are stored 2-bit packed per row at column offset j - lo(i).
    """
    n, m = xn.shape[0], yn.shape[0]
    nb = xn.shape[1]
    width = 2 * r + 2
    steps = np.full((n, (width + 3) // 4), 255, dtype=np.uint8)
    prev = np.full(m, _INF)
    cur = np.full(m, _INF)
    prev_lo, prev_hi = 0, -1
    for i in range(n):
        lo, hi = _band_lo_hi(i, n, m, r)
        for j in range(lo, hi + 1):
            cur[j] = _INF
        for j in range(lo, hi + 1):
            dot = 0.0
            for b in range(nb):
                dot += xn[i, b] * yn[j, b]
            d = 1.0 - dot
            if i == 0 and j == 0:
                best = 0.0
                code = 0
            else:
                best = _INF
                code = 3
                if prev_lo <= j - 1 <= prev_hi and prev[j - 1] < best:
                    best = prev[j - 1]
                    code = 0
                if prev_lo <= j <= prev_hi and prev[j] < best:
                    best = prev[j]
                    code = 1
                if j - 1 >= lo and cur[j - 1] < best:
                    best = cur[j - 1]
                    code = 2
            if code == 3:
                continue
            cur[j] = d + best
            off = j - lo
            byte = off // 4
            shift = 2 * (off % 4)
            old = steps[i, byte]
            steps[i, byte] = np.uint8((old & (255 ^ (3 << shift))) | (code << shift))
        prev, cur = cur, prev
        prev_lo, prev_hi = lo, hi
    return prev[m - 1], steps


@njit(cache=True)
def _backtrack(steps, n, m, r):
    max_len = n + m
    ii = np.empty(max_len, dtype=np.int64)
    jj = np.empty(max_len, dtype=np.int64)
    i, j = n - 1, m - 1
    k = max_len
    while True:
        k -= 1
        ii[k] = i
        jj[k] = j
        if i == 0 and j == 0:
            break
        lo, hi = _band_lo_hi(i, n, m, r)
        off = j - lo
        code = (steps[i, off // 4] >> (2 * (off % 4))) & 3
        if code == 0:
            i -= 1
            j -= 1
        elif code == 1:
            i -= 1
        elif code == 2:
            j -= 1
        else:
            return ii[:0], jj[:0]  # corrupt path
    return ii[k:], jj[k:]


def _unit_rows(values):
    v = np.ascontiguousarray(values, dtype=np.float64)
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0.0] = 1.0
    return v / norms


def banded_dtw(x: FeatureSequence, y: FeatureSequence, band_s=2.5):
    """Minimal-cost monotone warp path under cosine frame distance within a
    Sakoe-Chiba band around the scaled diagonal. Returns (WarpPath, cost)."""
    if x.n_frames == 0 or y.n_frames == 0:
        raise AlignmentError("empty feature sequence")
    if (x.sample_rate, x.hop) != (y.sample_rate, y.hop):
        raise AlignmentError("feature sequences have mismatched time bases")
    n, m = x.n_frames, y.n_frames
    r = band_radius_frames(band_s, x.sample_rate, x.hop)
    if abs((n - 1) * m / n - (m - 1)) > r:
        raise AlignmentError(
            f"band radius {r} frames cannot reach the endpoint for lengths "
            f"{n}x{m}; increase band_s")
    cost, steps = _dtw_band(_unit_rows(x.values), _unit_rows(y.values), r)
    if not np.isfinite(cost):
        raise AlignmentError(f"no path through the band (radius {r}); increase band_s")
    ii, jj = _backtrack(steps, n, m, r)
    if ii.size == 0:
        raise AlignmentError("backtracking failed")
    path = WarpPath(ii, jj, r)
    path.validate(n, m)
    return path, float(cost)


# ---------------------------------------------------------------------------
# applying the warp to MIDI


def warp_midi(p: Performance, path: WarpPath, midi_axis="x",
              sample_rate=SAMPLE_RATE, hop=HOP) -> Performance:
    """Map every event time through the piecewise-linear function induced by
    the warp path. midi_axis names the sequence the MIDI rendition produced
    ('x' = first DTW argument, 'y' = second)."""
    if midi_axis == "x":
        src, dst = path.i_idx, path.j_idx
    elif midi_axis == "y":
        src, dst = path.j_idx, path.i_idx
    else:
        raise ValueError("midi_axis must be 'x' or 'y'")
    xs, inverse = np.unique(src, return_inverse=True)
    ys = np.zeros(xs.size)
    counts = np.bincount(inverse)
    np.add.at(ys, inverse, dst.astype(np.float64))
    ys = ys / counts
    fps = sample_rate / hop

    def map_time(t):
        return float(np.interp(t * fps, xs, ys)) / fps

    notes = []
    for note in p.notes:
        onset = map_time(note.onset_s)
        offset = max(map_time(note.offset_s), onset + 0.001)
        notes.append(replace(note, onset_s=onset, offset_s=offset))
    pedals = [PedalEvent(map_time(e.time_s), e.value) for e in p.pedals]
    return Performance(notes=notes, pedals=pedals,
                       ticks_per_quarter=p.ticks_per_quarter,
                       tempo_map=list(p.tempo_map))


# ---------------------------------------------------------------------------
# sinusoidal rendering (desk-scale stand-in for a sampled piano)


def render_sinusoidal(p: Performance, sample_rate=SAMPLE_RATE, tail_s=0.25):
    """Additive render: 4 harmonic partials (1, 0.5, 0.25, 0.125), 10 ms
    attack, exponential decay, velocity-scaled; peak-normalized to 0.5."""
    if not p.notes:
        return np.zeros(int(sample_rate * tail_s))
    duration = max(n.offset_s for n in p.notes) + tail_s
    out = np.zeros(int(np.ceil(duration * sample_rate)))
    partial_amps = (1.0, 0.5, 0.25, 0.125)
    for note in p.notes:
        f0 = 440.0 * 2.0 ** ((note.pitch - 69) / 12.0)
        i0 = int(round(note.onset_s * sample_rate))
        i1 = min(int(round(note.offset_s * sample_rate)), out.size)
        if i1 <= i0:
            continue
        t = np.arange(i1 - i0) / sample_rate
        env = np.minimum(t / 0.010, 1.0) * np.exp(-t / 0.3)
        release = np.minimum((t[-1] - t) / 0.010, 1.0) if t.size > 1 else np.ones_like(t)
        env *= release
        seg = np.zeros_like(t)
        for h, amp in enumerate(partial_amps, start=1):
            fh = f0 * h
            if fh < sample_rate / 2:
                seg += amp * np.sin(2 * np.pi * fh * t)
        out[i0:i1] += (note.velocity / 127.0) * env * seg
    peak = np.abs(out).max()
    if peak > 0:
        out *= 0.5 / peak
    return out


# ---------------------------------------------------------------------------
# feature dump (binary f32 matrix with a JSON header)


def save_features(path, seq: FeatureSequence):
    header = json.dumps({"frames": seq.n_frames, "bins": seq.values.shape[1],
                         "sample_rate": seq.sample_rate, "hop": seq.hop,
                         "fmin": seq.fmin}).encode()
    with open(path, "wb") as f:
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(seq.values.astype("<f4").tobytes())


def load_features(path) -> FeatureSequence:
    with open(path, "rb") as f:
        (hlen,) = struct.unpack("<I", f.read(4))
        header = json.loads(f.read(hlen))
        data = np.frombuffer(f.read(), dtype="<f4").astype(np.float64)
    values = data.reshape(header["frames"], header["bins"])
    return FeatureSequence(values, header["sample_rate"], header["hop"], header["fmin"])
