"""Command-line interface.

Subcommands: align, loudness, fingering run, fingering serve, avfilter,
eval, export. Exit codes: 0 ok, 1 validation error, 2 I/O error,
3 pipeline failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2
EXIT_PIPELINE = 3


def _load_config(path):
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as f:
        return tomllib.load(f)


def _fingering_config(args, file_cfg):
    from .fingering import FingeringConfig
    cfg = FingeringConfig()
    section = file_cfg.get("fingering", {})
    for key in vars(cfg):
        if key in section:
            setattr(cfg, key, section[key])
    if getattr(args, "floating_threshold", None) is not None:
        cfg.floating_threshold = args.floating_threshold
    return cfg


def cmd_align(args, file_cfg):
    from . import alignment, audio, midi
    x, sr = audio.load_wav(args.audio)
    x = audio.resample(audio.downmix(x), sr, alignment.SAMPLE_RATE)
    with open(args.midi, "rb") as f:
        perf = midi.parse_midi(f.read())
    rendered = alignment.render_sinusoidal(perf)
    feat_midi = alignment.extract_features(rendered)
    feat_audio = alignment.extract_features(x)
    path, cost = alignment.banded_dtw(feat_midi, feat_audio, band_s=args.band)
    warped = alignment.warp_midi(perf, path, midi_axis="x")
    Path(args.out).write_bytes(midi.write_midi(warped))
    print(json.dumps({"out": args.out, "path_length": len(path), "cost": cost}))
    return EXIT_OK


def cmd_loudness(args, file_cfg):
    from . import audio, loudness
    with open(args.manifest) as f:
        manifest = json.load(f)
    rendition = [entry["rendition_loudness"] for entry in manifest]
    targets = loudness.compute_targets(rendition, global_target=args.target)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = []
    for entry, target in zip(manifest, targets):
        x, sr = audio.load_wav(entry["recording"])
        measured = loudness.integrated_loudness(x, sr)
        y, report = loudness.normalize_to(x, measured, target)
        stem = Path(entry["recording"]).stem
        audio.save_wav(out_dir / f"{stem}_normalized.wav", y, sr)
        report_obj = {"recording": entry["recording"],
                      "integrated_lufs": report.integrated_lufs,
                      "gain_applied_db": report.gain_applied_db,
                      "target_lufs": report.target_lufs,
                      "clipped_samples": report.clipped_samples}
        (out_dir / f"{stem}_loudness.json").write_text(json.dumps(report_obj, indent=1))
        reports.append(report_obj)
    print(json.dumps(reports, indent=1))
    return EXIT_OK


def cmd_fingering_run(args, file_cfg):
    from . import geometry
    from .depth import load_landmarks
    from .fingering import run_pipeline
    from .midi import parse_midi, split_by_hand, write_midi
    with open(args.midi, "rb") as f:
        perf = parse_midi(f.read())
    frames = load_landmarks(args.landmarks)
    geo = geometry.load_geometry(args.geometry)
    cfg = _fingering_config(args, file_cfg)
    result = run_pipeline(frames, perf, geo, cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "fingering.jsonl").write_text(result.annotation.to_jsonl(perf.notes))
    (out_dir / "fingering.csv").write_text(result.annotation.to_csv(perf.notes))
    if args.split_hands:
        hand_of = result.hand_of
        labeled = [n for n in perf.notes if n.note_id in hand_of]
        partial = type(perf)(notes=labeled, pedals=list(perf.pedals),
                             ticks_per_quarter=perf.ticks_per_quarter,
                             tempo_map=list(perf.tempo_map))
        left, right = split_by_hand(partial, hand_of)
        (out_dir / "left.mid").write_bytes(write_midi(left))
        (out_dir / "right.mid").write_bytes(write_midi(right))
    print(json.dumps(result.stats))
    return EXIT_OK


def cmd_fingering_serve(args, file_cfg):
    from .server import serve
    from .session import Bundle, Session
    if args.midi:
        bundle = Bundle(args.midi, args.landmarks, args.geometry, args.frames_dir)
        session = Session.create(bundle, args.session_dir,
                                 _fingering_config(args, file_cfg))
    else:
        session = Session.load(args.session_dir)
    serve(session, host=args.host, port=args.port, ui_dir=args.ui_dir)
    return EXIT_OK


def cmd_avfilter(args, file_cfg):
    from . import geometry
    from .avfilter import FilterConfig, filter_performance
    from .depth import load_landmarks
    from .midi import parse_midi, write_midi
    with open(args.midi, "rb") as f:
        perf = parse_midi(f.read())
    frames = load_landmarks(args.landmarks)
    geo = geometry.load_geometry(args.geometry)
    cfg = FilterConfig(candidate_range=args.range, set_combine=args.combine,
                       fps=args.fps)
    filtered, log = filter_performance(perf, frames, geo, cfg)
    Path(args.out).write_bytes(write_midi(filtered))
    if args.log:
        Path(args.log).write_text(log.to_jsonl())
    kept = sum(1 for d in log.decisions if d.decision == "kept")
    print(json.dumps({"input_notes": len(perf.notes), "kept": kept,
                      "discarded": len(perf.notes) - kept}))
    return EXIT_OK


def cmd_eval(args, file_cfg):
    from . import metrics
    from .midi import apply_sustain_extension, parse_midi
    with open(args.ref, "rb") as f:
        ref = parse_midi(f.read())
    with open(args.est, "rb") as f:
        est = parse_midi(f.read())
    ref_notes = apply_sustain_extension(ref) if args.pedal_extend else ref.notes
    est_notes = apply_sustain_extension(est) if args.pedal_extend else est.notes
    report = {}
    for mode, name in (("onset", "note"), ("offset", "note_with_offset"),
                       ("velocity", "note_with_velocity")):
        m = metrics.note_metrics(ref_notes, est_notes, mode=mode,
                                 onset_tol=args.onset_tol)
        report[name] = {"precision": m.precision, "recall": m.recall, "f1": m.f1}
    p, r, f1 = metrics.frame_metrics(ref_notes, est_notes)
    report["frame"] = {"precision": p, "recall": r, "f1": f1}
    text = json.dumps(report, indent=1)
    if args.out:
        Path(args.out).write_text(text)
    print(text)
    return EXIT_OK


def cmd_export(args, file_cfg):
    from .session import Session
    session = Session.load(args.session_dir)
    result = session.export(allow_partial=args.allow_partial)
    print(json.dumps(result))
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="pianolabel")
    parser.add_argument("--config", help="optional TOML config file")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("align", help="warp MIDI onto recorded audio via CQT + DTW")
    p.add_argument("--audio", required=True)
    p.add_argument("--midi", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--band", type=float, default=2.5, help="Sakoe-Chiba band, seconds")
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("loudness", help="normalize recordings toward rendition targets")
    p.add_argument("--manifest", required=True,
                   help='JSON list of {"recording": path, "rendition_loudness": LUFS}')
    p.add_argument("--out-dir", required=True)
    p.add_argument("--target", type=float, default=-23.0)
    p.set_defaults(func=cmd_loudness)

    p = sub.add_parser("fingering", help="fingering pipeline / annotation service")
    fsub = p.add_subparsers(dest="fingering_command", required=True)
    pr = fsub.add_parser("run", help="run the automatic fingering pipeline")
    pr.add_argument("--midi", required=True)
    pr.add_argument("--landmarks", required=True)
    pr.add_argument("--geometry", required=True)
    pr.add_argument("--out-dir", required=True)
    pr.add_argument("--floating-threshold", type=float, default=None)
    pr.add_argument("--split-hands", action="store_true")
    pr.set_defaults(func=cmd_fingering_run)
    ps = fsub.add_parser("serve", help="serve the annotation API")
    ps.add_argument("--session-dir", required=True)
    ps.add_argument("--midi")
    ps.add_argument("--landmarks")
    ps.add_argument("--geometry")
    ps.add_argument("--frames-dir")
    ps.add_argument("--floating-threshold", type=float, default=None)
    ps.add_argument("--host", default="127.0.0.1")
    ps.add_argument("--port", type=int, default=8420)
    ps.add_argument("--ui-dir", help="static directory with the browser UI")
    ps.set_defaults(func=cmd_fingering_serve)

    p = sub.add_parser("avfilter", help="discard visually implausible onsets")
    p.add_argument("--midi", required=True)
    p.add_argument("--landmarks", required=True)
    p.add_argument("--geometry", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--log")
    p.add_argument("--range", type=int, default=2)
    p.add_argument("--combine", choices=["union", "intersection"], default="union")
    p.add_argument("--fps", type=float, default=60.0)
    p.set_defaults(func=cmd_avfilter)

    p = sub.add_parser("eval", help="transcription metrics for a ref/est MIDI pair")
    p.add_argument("--ref", required=True)
    p.add_argument("--est", required=True)
    p.add_argument("--out")
    p.add_argument("--onset-tol", type=float, default=0.05)
    p.add_argument("--pedal-extend", action="store_true",
                   help="extend offsets to sustain-pedal release before scoring")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("export", help="export a session's fingering + per-hand MIDI")
    p.add_argument("--session-dir", required=True)
    p.add_argument("--allow-partial", action="store_true")
    p.set_defaults(func=cmd_export)

    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    file_cfg = {}
    try:
        if args.config:
            file_cfg = _load_config(args.config)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO

    from .depth import CalibrationError
    from .midi import HandSplitError, MidiParseError
    from .session import SessionError
    try:
        return args.func(args, file_cfg)
    except (ValueError, MidiParseError, HandSplitError, SessionError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_IO
    except (CalibrationError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == "__main__":
    sys.exit(main())
