import json

import numpy as np
import pytest

from pianolabel.avfilter import (FilterConfig, filter_performance,
                                 frame_for_onset, plausible_pitches)
from pianolabel.geometry import (KeyLayout, WHITE_PITCHES, WHITE_W,
                                 compute_homography)
from pianolabel.midi import NoteEvent, PedalEvent, Performance

from synth import GEOMETRY, make_frames, make_hand, random_performance

LAYOUT = KeyLayout()
HOMOGRAPHY = compute_homography(GEOMETRY)
FPS = 60.0


def hand_over_white(indices, side="R", score=1.0):
    """Hand whose five fingertips hover over the given white-key indices
    (fewer than five indices repeats the last)."""
    idx = (list(indices) + [indices[-1]] * 5)[:5]
    tips = [((wi + 0.5) * WHITE_W, 100.0) for wi in idx]
    return make_hand(side, tips, score=score)


# -- frame lookup -----------------------------------------------------------


def test_frame_midpoint_exact():
    assert frame_for_onset(1.0 / 120.0, 60.0, 100) == 0


def test_frame_tie_goes_lower():
    assert frame_for_onset(1.0 / 60.0, 60.0, 100) == 0


def test_frame_clamped_to_video():
    assert frame_for_onset(999.0, 60.0, 100) == 99
    assert frame_for_onset(0.0, 60.0, 100) == 0


def test_frame_requires_frames():
    with pytest.raises(ValueError):
        frame_for_onset(1.0, 60.0, 0)


def test_frame_nearest_midpoint_oracle():
    rng = np.random.default_rng(3)
    mids = (np.arange(200) + 0.5) / 60.0
    for onset in rng.uniform(0, 4, 500):
        best = int(np.argmin(np.abs(mids - onset)))  # argmin takes lower tie
        assert frame_for_onset(float(onset), 60.0, 200) == best


# -- candidate sets ---------------------------------------------------------


def test_single_fingertip_window():
    cfg = FilterConfig()
    hands = [hand_over_white([26])]
    got = plausible_pitches(hands, GEOMETRY, HOMOGRAPHY, LAYOUT, cfg)
    assert got == {62, 63, 64, 65, 66, 67, 68, 69}


def test_disjoint_fingertips_intersection_empty():
    cfg = FilterConfig(set_combine="intersection")
    hands = [hand_over_white([10]), hand_over_white([20], side="L")]
    got = plausible_pitches(hands, GEOMETRY, HOMOGRAPHY, LAYOUT, cfg)
    assert got == set()


def test_adjacent_fingertips_union():
    cfg = FilterConfig()
    hands = [hand_over_white([26]), hand_over_white([27], side="L")]
    got = plausible_pitches(hands, GEOMETRY, HOMOGRAPHY, LAYOUT, cfg)
    expect = LAYOUT.candidate_pitches(26, 2) | LAYOUT.candidate_pitches(27, 2)
    assert got == expect


def test_bad_config_rejected():
    with pytest.raises(ValueError):
        FilterConfig(candidate_range=-1)
    with pytest.raises(ValueError):
        FilterConfig(set_combine="xor")
    with pytest.raises(ValueError):
        FilterConfig(fps=0.0)


# -- end-to-end filtering ---------------------------------------------------


def _one_note_perf(pitch, onset=0.5 / FPS):
    return Performance(notes=[NoteEvent(0, onset, onset + 0.3, pitch, 64)],
                       pedals=[PedalEvent(0.1, 127)])


def _frames_with_hand(hand_or_none, n=30):
    return make_frames(lambda i: [hand_or_none] if hand_or_none else [],
                       fps=FPS, n_frames=n)


def test_note_under_fingertip_retained():
    wi = WHITE_PITCHES.index(65)
    p = _one_note_perf(65)
    out, log = filter_performance(p, _frames_with_hand(hand_over_white([wi])),
                                  GEOMETRY)
    assert [n.pitch for n in out.notes] == [65]
    assert log.decisions[0].decision == "kept"
    assert log.decisions[0].reason == "pitch plausible"


def test_far_spurious_note_discarded():
    wi = WHITE_PITCHES.index(65)
    p = _one_note_perf(65 - 36)  # 3 octaves below the hand
    out, log = filter_performance(p, _frames_with_hand(hand_over_white([wi])),
                                  GEOMETRY)
    assert out.notes == []
    assert log.decisions[0].decision == "discarded"
    assert out.pedals == p.pedals  # non-note events untouched


def test_no_hands_keeps_everything():
    p = _one_note_perf(21)
    out, log = filter_performance(p, _frames_with_hand(None), GEOMETRY)
    assert len(out.notes) == 1
    assert log.decisions[0].reason == "no hand detected"


def test_low_score_hand_treated_absent():
    wi = WHITE_PITCHES.index(65)
    hand = hand_over_white([wi], score=0.3)
    out, _ = filter_performance(_one_note_perf(21), _frames_with_hand(hand),
                                GEOMETRY)
    assert len(out.notes) == 1


def test_keep_policy_skips_single_hand_frames():
    wi = WHITE_PITCHES.index(65)
    cfg = FilterConfig(missing_hand_policy="keep")
    out, log = filter_performance(
        _one_note_perf(21), _frames_with_hand(hand_over_white([wi])),
        GEOMETRY, cfg)
    assert len(out.notes) == 1
    assert log.decisions[0].reason == "single hand, keep policy"


def test_no_frames_keeps_with_log():
    p = _one_note_perf(60)
    out, log = filter_performance(p, [], GEOMETRY)
    assert len(out.notes) == 1
    assert log.decisions[0].reason == "no landmark coverage"


def test_output_subset_and_deterministic():
    rng = np.random.default_rng(12)
    p = random_performance(rng, n_notes=80, duration=10.0)
    hand = hand_over_white([20, 21, 22, 23, 24])
    frames = _frames_with_hand(hand, n=int(10 * FPS))
    out1, log1 = filter_performance(p, frames, GEOMETRY)
    out2, log2 = filter_performance(p, frames, GEOMETRY)
    ids = {n.note_id for n in p.notes}
    assert {n.note_id for n in out1.notes} <= ids
    assert out1.notes == out2.notes and log1.to_jsonl() == log2.to_jsonl()


def test_monotone_in_candidate_range():
    rng = np.random.default_rng(13)
    p = random_performance(rng, n_notes=80, duration=10.0)
    hand = hand_over_white([20, 21, 22, 23, 24])
    frames = _frames_with_hand(hand, n=int(10 * FPS))
    kept_prev = set()
    for r in range(4):
        out, _ = filter_performance(p, frames, GEOMETRY,
                                    FilterConfig(candidate_range=r))
        kept = {n.note_id for n in out.notes}
        assert kept_prev <= kept
        kept_prev = kept


def test_log_jsonl_schema():
    wi = WHITE_PITCHES.index(65)
    _, log = filter_performance(_one_note_perf(65),
                                _frames_with_hand(hand_over_white([wi])),
                                GEOMETRY)
    obj = json.loads(log.to_jsonl().strip())
    assert set(obj) == {"note_id", "frame", "decision", "reason", "candidates"}
    assert obj["frame"] == 0 and obj["decision"] == "kept"
