"""Transcription and fingering evaluation.

Note-level scores use one-to-one maximum matching between reference and
estimated notes under onset (and optionally offset / velocity) tolerances,
following the conventions of the standard transcription evaluation
package. Frame scores rasterize both note lists to a 10 ms piano roll.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

ONSET_TOLERANCE_S = 0.05
OFFSET_MIN_TOLERANCE_S = 0.05
OFFSET_RATIO = 0.2
VELOCITY_TOLERANCE = 0.1


@dataclass
class MatchResult:
    pairs: list            # (ref_index, est_index)
    precision: float
    recall: float
    f1: float


def _prf(n_match, n_ref, n_est):
    precision = n_match / n_est if n_est else 0.0
    recall = n_match / n_ref if n_ref else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def _max_matching(n_ref, n_est, eligible_pairs):
    """Maximum-cardinality one-to-one matching from eligible (ref, est) pairs."""
    if not eligible_pairs:
        return []
    rows = [r for r, _ in eligible_pairs]
    cols = [e for _, e in eligible_pairs]
    graph = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n_ref, n_est))
    match = maximum_bipartite_matching(graph, perm_type="column")
    return [(r, int(match[r])) for r in range(n_ref) if match[r] >= 0]


def _eligible(ref, est, mode, onset_tol, velocity_scale=None, ref_vel_norm=None):
    pairs = []
    for i, rn in enumerate(ref):
        for j, en in enumerate(est):
            if rn.pitch != en.pitch:
                continue
            if abs(rn.onset_s - en.onset_s) > onset_tol:
                continue
            if mode == "offset":
                tol = max(OFFSET_MIN_TOLERANCE_S, OFFSET_RATIO * (rn.offset_s - rn.onset_s))
                if abs(rn.offset_s - en.offset_s) > tol:
                    continue
            elif mode == "velocity":
                if abs(velocity_scale * en.velocity - ref_vel_norm[i]) > VELOCITY_TOLERANCE:
                    continue
            pairs.append((i, j))
    return pairs


def note_metrics(ref, est, mode="onset", onset_tol=ONSET_TOLERANCE_S) -> MatchResult:
    """Precision/recall/F1 over a maximum one-to-one note matching.

    mode: 'onset' (pitch + onset), 'offset' (adds offset tolerance of
    max(50 ms, 20% of reference duration)), or 'velocity' (estimated
    velocities least-squares rescaled to max-normalized reference
    velocities, matched within 0.1).
    """
    if mode not in ("onset", "offset", "velocity"):
        raise ValueError(f"unknown mode {mode}")
    ref, est = list(ref), list(est)
    scale, ref_vel_norm = None, None
    if mode == "velocity":
        vmax = max((n.velocity for n in ref), default=0) or 1
        ref_vel_norm = [n.velocity / vmax for n in ref]
        base = _max_matching(len(ref), len(est),
                             _eligible(ref, est, "onset", onset_tol))
        num = sum(ref_vel_norm[i] * est[j].velocity for i, j in base)
        den = sum(est[j].velocity ** 2 for _, j in base)
        scale = num / den if den else 1.0
    pairs = _max_matching(len(ref), len(est),
                          _eligible(ref, est, mode, onset_tol, scale, ref_vel_norm))
    p, r, f1 = _prf(len(pairs), len(ref), len(est))
    return MatchResult(pairs, p, r, f1)


def frame_metrics(ref, est, hop=0.01):
    """Frame-level precision/recall/F1 on a piano roll sampled every `hop`
    seconds (a note sounds at t when onset <= t < offset)."""
    end = max([n.offset_s for n in list(ref) + list(est)], default=0.0)
    n_frames = int(math.ceil(end / hop))
    tp = ref_count = est_count = 0
    ref_roll = _rasterize(ref, hop, n_frames)
    est_roll = _rasterize(est, hop, n_frames)
    for k in range(n_frames):
        r_set, e_set = ref_roll[k], est_roll[k]
        tp += len(r_set & e_set)
        ref_count += len(r_set)
        est_count += len(e_set)
    return _prf(tp, ref_count, est_count)


def _rasterize(notes, hop, n_frames):
    roll = [set() for _ in range(n_frames)]
    for n in notes:
        k0 = int(math.ceil(n.onset_s / hop - 1e-9))
        k1 = int(math.ceil(n.offset_s / hop - 1e-9))
        for k in range(max(k0, 0), min(k1, n_frames)):
            roll[k].add(n.pitch)
    return roll


@dataclass
class FingeringScore:
    precision: float | None
    n_auto_in_range: int
    n_correct: int
    pending_none_fraction: float
    pending_multi_fraction: float


def fingering_precision(ref_labels, annotation, n_first=150,
                        allow_substitution=()) -> FingeringScore:
    """Precision of auto labels over the first n_first notes, with declared
    substitution finger pairs counted correct; also the fractions of
    pending-none / pending-multi notes over the whole recording."""
    subs = {frozenset(pair) for pair in allow_substitution}
    entries = sorted(annotation.entries.values(), key=lambda e: e.note_id)
    first = entries[:n_first]
    auto = [e for e in first if e.status == "auto"]
    n_correct = 0
    for e in auto:
        ref = ref_labels.get(e.note_id)
        if ref is None:
            continue
        ref_hand, ref_finger = ref
        ok = (e.label.hand == ref_hand and
              (e.label.finger == ref_finger or
               frozenset((e.label.finger, ref_finger)) in subs))
        n_correct += ok
    precision = n_correct / len(auto) if auto else None
    n = max(len(entries), 1)
    none_frac = sum(1 for e in entries if e.status == "pending-none") / n
    multi_frac = sum(1 for e in entries if e.status == "pending-multi") / n
    return FingeringScore(precision, len(auto), n_correct, none_frac, multi_frac)


def cohens_d(a, b) -> float:
    """Standardized mean difference with pooled (n-1)-weighted variance."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size < 2 or b.size < 2:
        raise ValueError("both samples need at least 2 observations")
    pooled_var = ((a.size - 1) * a.var(ddof=1) + (b.size - 1) * b.var(ddof=1)) / \
        (a.size + b.size - 2)
    if pooled_var <= 0:
        raise ValueError("zero pooled standard deviation")
    return float((a.mean() - b.mean()) / math.sqrt(pooled_var))
