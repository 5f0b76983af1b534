import itertools
import math

import numpy as np
import pytest

from pianolabel.fingering import (Candidate, FingerId, FingeringAnnotation,
                                  NoteAnnotation)
from pianolabel.metrics import (cohens_d, fingering_precision, frame_metrics,
                                note_metrics)
from pianolabel.midi import NoteEvent


def notes(rows):
    return [NoteEvent(i, on, off, p, v) for i, (on, off, p, v) in enumerate(rows)]


# -- note matching ----------------------------------------------------------


def test_exact_match_perfect_scores():
    ref = notes([(0.0, 0.5, 60, 64), (0.5, 1.0, 64, 70), (1.0, 1.5, 67, 80)])
    for mode in ("onset", "offset", "velocity"):
        r = note_metrics(ref, ref, mode=mode)
        assert (r.precision, r.recall, r.f1) == (1.0, 1.0, 1.0)


def test_onsets_within_tolerance():
    ref = notes([(0.0, 0.5, 60, 64), (1.0, 1.5, 67, 80)])
    est = [NoteEvent(n.note_id, n.onset_s + 0.04, n.offset_s, n.pitch, n.velocity)
           for n in ref]
    assert note_metrics(ref, est).f1 == 1.0
    est = [NoteEvent(n.note_id, n.onset_s + 0.06, n.offset_s, n.pitch, n.velocity)
           for n in ref]
    assert note_metrics(ref, est).f1 == 0.0


def test_pitch_must_match():
    ref = notes([(0.0, 0.5, 60, 64)])
    est = notes([(0.0, 0.5, 61, 64)])
    assert note_metrics(ref, est).f1 == 0.0


def test_offset_mode_tolerance_rule():
    # 1 s note: offset tolerance max(0.05, 0.2*1.0) = 0.2
    ref = notes([(0.0, 1.0, 60, 64)])
    ok = notes([(0.0, 1.19, 60, 64)])
    bad = notes([(0.0, 1.21, 60, 64)])
    assert note_metrics(ref, ok, mode="offset").f1 == 1.0
    assert note_metrics(ref, bad, mode="offset").f1 == 0.0
    # 0.1 s note: the 50 ms floor applies
    ref = notes([(0.0, 0.1, 60, 64)])
    ok = notes([(0.0, 0.149, 60, 64)])
    assert note_metrics(ref, ok, mode="offset").f1 == 1.0


def test_velocity_mode_scale_invariant():
    ref = notes([(0.0, 0.5, 60, 100), (0.5, 1.0, 64, 50), (1.0, 1.5, 67, 80)])
    est = [NoteEvent(n.note_id, n.onset_s, n.offset_s, n.pitch,
                     max(1, n.velocity // 2)) for n in ref]
    # estimated velocities are half the reference: the rescaling absorbs it
    assert note_metrics(ref, est, mode="velocity").f1 == 1.0


def test_velocity_mode_catches_wrong_dynamics():
    ref = notes([(0.0, 0.5, 60, 100), (0.5, 1.0, 64, 30), (1.0, 1.5, 67, 90)])
    est = [NoteEvent(0, 0.0, 0.5, 60, 30), NoteEvent(1, 0.5, 1.0, 64, 100),
           NoteEvent(2, 1.0, 1.5, 67, 90)]  # dynamics swapped on two notes
    r = note_metrics(ref, est, mode="velocity")
    assert r.f1 < 1.0


def _brute_force_max_matching(eligible, n_ref, n_est):
    best = 0
    est_list = list(range(n_est))
    adj = {i: [j for (a, j) in eligible if a == i] for i in range(n_ref)}

    def rec(i, used):
        nonlocal best
        if i == n_ref:
            best = max(best, len(used))
            return
        rec(i + 1, used)
        for j in adj[i]:
            if j not in used:
                rec(i + 1, used | {j})
    rec(0, frozenset())
    return best


def test_matching_optimal_vs_brute_force():
    rng = np.random.default_rng(17)
    for _ in range(10):
        n_ref, n_est = rng.integers(1, 9, 2)
        ref = notes([(float(t), float(t) + 0.2, int(rng.integers(60, 63)), 64)
                     for t in rng.uniform(0, 0.3, n_ref)])
        est = notes([(float(t), float(t) + 0.2, int(rng.integers(60, 63)), 64)
                     for t in rng.uniform(0, 0.3, n_est)])
        eligible = [(i, j) for i in range(len(ref)) for j in range(len(est))
                    if ref[i].pitch == est[j].pitch
                    and abs(ref[i].onset_s - est[j].onset_s) <= 0.05]
        expect = _brute_force_max_matching(eligible, len(ref), len(est))
        assert len(note_metrics(ref, est).pairs) == expect


def test_precision_recall_symmetry():
    rng = np.random.default_rng(19)
    ref = notes([(float(t), float(t) + 0.2, int(rng.integers(60, 64)), 64)
                 for t in rng.uniform(0, 2, 20)])
    est = notes([(float(t), float(t) + 0.2, int(rng.integers(60, 64)), 64)
                 for t in rng.uniform(0, 2, 15)])
    fwd = note_metrics(ref, est)
    rev = note_metrics(est, ref)
    assert fwd.precision == pytest.approx(rev.recall)
    assert fwd.recall == pytest.approx(rev.precision)


def test_empty_lists():
    r = note_metrics([], [])
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
    ref = notes([(0.0, 0.5, 60, 64)])
    assert note_metrics(ref, []).recall == 0.0
    assert note_metrics([], ref).precision == 0.0


# -- frame metrics ----------------------------------------------------------


def test_frame_identical_rolls():
    ref = notes([(0.0, 0.5, 60, 64), (0.25, 0.75, 64, 64)])
    assert frame_metrics(ref, ref) == (1.0, 1.0, 1.0)


def test_frame_half_coverage():
    ref = notes([(0.0, 1.0, 60, 64)])
    est = notes([(0.0, 0.5, 60, 64)])
    p, r, f1 = frame_metrics(ref, est)
    assert p == 1.0 and r == pytest.approx(0.5)


def test_frame_counts_match_manual_rasterization():
    # note [0.005, 0.032): sounds in frames 1..3 of the 10 ms raster
    # (frame k covers time k*hop; onset 0.005 -> first frame ceil(0.5)=1,
    # offset 0.032 -> last frame ceil(3.2)-1 = 3)
    ref = notes([(0.005, 0.032, 60, 64)])
    est = notes([(0.01, 0.03, 60, 64)])  # frames 1..2
    p, r, f1 = frame_metrics(ref, est)
    assert r == pytest.approx(2 / 3)
    assert p == pytest.approx(1.0)


# -- fingering precision ----------------------------------------------------


def _ann(statuses_labels):
    entries = {}
    for i, (status, label) in enumerate(statuses_labels):
        cands = [Candidate(label, 9.0, True)] if label else []
        entries[i] = NoteAnnotation(i, status, label, cands, 10.0)
    return FingeringAnnotation(entries)


def test_all_auto_correct():
    ann = _ann([("auto", FingerId("R", 2))] * 10)
    ref = {i: ("R", 2) for i in range(10)}
    score = fingering_precision(ref, ann)
    assert score.precision == 1.0 and score.n_auto_in_range == 10


def test_precision_arithmetic():
    labels = [("auto", FingerId("R", 2))] * 100 + [("pending-none", None)] * 50
    ann = _ann(labels)
    ref = {i: ("R", 2) if i < 95 else ("R", 3) for i in range(150)}
    score = fingering_precision(ref, ann, n_first=150)
    assert score.precision == pytest.approx(0.95)
    assert score.n_auto_in_range == 100 and score.n_correct == 95
    assert score.pending_none_fraction == pytest.approx(50 / 150)


def test_substitution_pair_counts_correct():
    ann = _ann([("auto", FingerId("R", 4))])
    ref = {0: ("R", 3)}
    assert fingering_precision(ref, ann).precision == 0.0
    assert fingering_precision(ref, ann, allow_substitution=[(3, 4)]).precision == 1.0
    # hand must still match
    assert fingering_precision({0: ("L", 3)}, ann,
                               allow_substitution=[(3, 4)]).precision == 0.0


def test_no_auto_notes_reports_absent():
    ann = _ann([("pending-multi", None)] * 5)
    score = fingering_precision({}, ann)
    assert score.precision is None
    assert score.pending_multi_fraction == 1.0


# -- Cohen's d --------------------------------------------------------------


def test_cohens_d_identical_zero():
    a = [1.0, 2.0, 3.0, 4.0]
    assert cohens_d(a, a) == 0.0


def test_cohens_d_one_sd_shift():
    rng = np.random.default_rng(23)
    a = rng.standard_normal(10000)
    sd = a.std(ddof=1)
    assert cohens_d(a + sd, a) == pytest.approx(1.0, abs=1e-9)


def test_cohens_d_hand_computed():
    # means 5 and 3, both samples with variance 4 -> pooled SD 2, d = 1
    a = np.array([3.0, 7.0, 3.0, 7.0])  # mean 5
    b = np.array([1.0, 5.0, 1.0, 5.0])  # mean 3
    assert a.var(ddof=1) == pytest.approx(16 / 3)
    pooled = math.sqrt(16 / 3)
    assert cohens_d(a, b) == pytest.approx(2.0 / pooled)


def test_cohens_d_antisymmetric_and_errors():
    rng = np.random.default_rng(29)
    a, b = rng.standard_normal(50), rng.standard_normal(40) + 0.3
    assert cohens_d(a, b) == pytest.approx(-cohens_d(b, a))
    with pytest.raises(ValueError):
        cohens_d([1.0], [1.0, 2.0])
    with pytest.raises(ValueError):
        cohens_d([2.0, 2.0], [2.0, 2.0])
