"""Standard MIDI File reading/writing and note event utilities.

Supports SMF type 0 and 1. Note-on/note-off pairs are resolved to
NoteEvent records with onset/offset in seconds (via the tempo map),
CC64 messages become PedalEvent records. Also provides sustain-pedal
offset extension and splitting a performance into per-hand files.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field, replace

PIANO_PITCH_MIN = 21
PIANO_PITCH_MAX = 108

DEFAULT_TEMPO = 500000  # microseconds per quarter note (120 BPM)


class MidiParseError(ValueError):
    """Malformed SMF data; carries the byte offset where parsing failed."""

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (byte offset {offset})"
        super().__init__(message)
        self.offset = offset


@dataclass(frozen=True)
class NoteEvent:
    note_id: int
    onset_s: float
    offset_s: float
    pitch: int
    velocity: int

    def __post_init__(self):
        if self.offset_s <= self.onset_s:
            raise ValueError(f"note {self.note_id}: offset must exceed onset")

    @property
    def in_piano_range(self):
        return PIANO_PITCH_MIN <= self.pitch <= PIANO_PITCH_MAX


@dataclass(frozen=True)
class PedalEvent:
    time_s: float
    value: int


@dataclass
class Performance:
    notes: list[NoteEvent] = field(default_factory=list)
    pedals: list[PedalEvent] = field(default_factory=list)
    ticks_per_quarter: int = 480
    tempo_map: list[tuple[int, int]] = field(default_factory=list)

    def sorted_notes(self):
        return sorted(self.notes, key=lambda n: (n.onset_s, n.pitch))


# ---------------------------------------------------------------------------
# tempo map: tick <-> seconds


class _TempoMap:
    """Piecewise-linear tick<->seconds conversion from (tick, us/quarter) pairs."""

    def __init__(self, tempo_events, ticks_per_quarter):
        self.tpq = ticks_per_quarter
        events = sorted(tempo_events)
        if not events or events[0][0] > 0:
            events = [(0, DEFAULT_TEMPO)] + events
        # precompute seconds at each tempo-change tick
        self.ticks = []
        self.tempi = []
        self.seconds = []
        t_s = 0.0
        prev_tick = 0
        prev_tempo = events[0][1]
        for tick, tempo in events:
            t_s += (tick - prev_tick) * prev_tempo / (1e6 * self.tpq)
            self.ticks.append(tick)
            self.tempi.append(tempo)
            self.seconds.append(t_s)
            prev_tick, prev_tempo = tick, tempo

    def _segment(self, tick):
        lo, hi = 0, len(self.ticks) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.ticks[mid] <= tick:
                lo = mid
            else:
                hi = mid - 1
        return lo

    def to_seconds(self, tick):
        i = self._segment(tick)
        return self.seconds[i] + (tick - self.ticks[i]) * self.tempi[i] / (1e6 * self.tpq)

    def to_ticks(self, seconds):
        i = 0
        for j in range(len(self.seconds)):
            if self.seconds[j] <= seconds:
                i = j
        tick = self.ticks[i] + (seconds - self.seconds[i]) * 1e6 * self.tpq / self.tempi[i]
        return int(round(tick))


# ---------------------------------------------------------------------------
# parsing


def _read_varlen(data, pos):
    value = 0
    start = pos
    while True:
        if pos >= len(data):
            raise MidiParseError("truncated variable-length quantity", start)
        byte = data[pos]
        pos += 1
        value = (value << 7) | (byte & 0x7F)
        if not byte & 0x80:
            return value, pos
        if pos - start > 4:
            raise MidiParseError("variable-length quantity too long", start)


def _parse_track(data, offset, end):
    """Yield (tick, kind, payload) items from one MTrk chunk body."""
    pos = offset
    tick = 0
    running_status = None
    while pos < end:
        delta, pos = _read_varlen(data, pos)
        tick += delta
        if pos >= end:
            raise MidiParseError("event truncated", pos)
        status = data[pos]
        if status & 0x80:
            pos += 1
            if status < 0xF0:
                running_status = status
        else:
            if running_status is None:
                raise MidiParseError("data byte without running status", pos)
            status = running_status

        if status == 0xFF:  # meta
            if pos >= end:
                raise MidiParseError("meta event truncated", pos)
            meta_type = data[pos]
            pos += 1
            length, pos = _read_varlen(data, pos)
            payload = data[pos:pos + length]
            if len(payload) < length:
                raise MidiParseError("meta payload truncated", pos)
            pos += length
            if meta_type == 0x51:
                if length != 3:
                    raise MidiParseError("bad tempo meta length", pos)
                yield tick, "tempo", int.from_bytes(payload, "big")
            elif meta_type == 0x2F:
                yield tick, "end", None
                return
        elif status in (0xF0, 0xF7):  # sysex
            length, pos = _read_varlen(data, pos)
            pos += length
            if pos > end:
                raise MidiParseError("sysex truncated", pos)
        else:
            kind = status & 0xF0
            channel = status & 0x0F
            n_data = 1 if kind in (0xC0, 0xD0) else 2
            if pos + n_data > end:
                raise MidiParseError("channel event truncated", pos)
            d = data[pos:pos + n_data]
            pos += n_data
            if kind == 0x90 and d[1] > 0:
                yield tick, "note_on", (channel, d[0], d[1])
            elif kind == 0x80 or (kind == 0x90 and d[1] == 0):
                yield tick, "note_off", (channel, d[0])
            elif kind == 0xB0 and d[0] == 64:
                yield tick, "pedal", d[1]


def parse_midi(data: bytes) -> Performance:
    """Parse SMF type 0/1 bytes into a Performance with times in seconds."""
    if len(data) < 14 or data[:4] != b"MThd":
        raise MidiParseError("missing MThd header", 0)
    header_len = int.from_bytes(data[4:8], "big")
    if header_len < 6:
        raise MidiParseError("bad MThd length", 4)
    fmt = int.from_bytes(data[8:10], "big")
    n_tracks = int.from_bytes(data[10:12], "big")
    division = int.from_bytes(data[12:14], "big")
    if fmt not in (0, 1):
        raise MidiParseError(f"unsupported SMF type {fmt}", 8)
    if division & 0x8000:
        raise MidiParseError("SMPTE time division not supported", 12)
    tpq = division

    pos = 8 + header_len
    tracks = []
    for _ in range(n_tracks):
        if pos + 8 > len(data):
            raise MidiParseError("missing MTrk chunk", pos)
        if data[pos:pos + 4] != b"MTrk":
            raise MidiParseError("bad track chunk id", pos)
        length = int.from_bytes(data[pos + 4:pos + 8], "big")
        body_start = pos + 8
        body_end = body_start + length
        if body_end > len(data):
            raise MidiParseError("track chunk overruns file", pos + 4)
        tracks.append(list(_parse_track(data, body_start, body_end)))
        pos = body_end

    tempo_events = []
    for track in tracks:
        for tick, kind, payload in track:
            if kind == "tempo":
                tempo_events.append((tick, payload))
    tmap = _TempoMap(tempo_events, tpq)

    # pair note-ons with the next matching off on the same channel/pitch (FIFO)
    notes_raw = []  # (onset_tick, offset_tick, pitch, velocity)
    pedals_raw = []
    final_tick = 0
    for track in tracks:
        open_notes: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for tick, kind, payload in track:
            final_tick = max(final_tick, tick)
            if kind == "note_on":
                channel, pitch, velocity = payload
                open_notes.setdefault((channel, pitch), []).append((tick, velocity))
            elif kind == "note_off":
                channel, pitch = payload
                queue = open_notes.get((channel, pitch))
                if queue:
                    onset_tick, velocity = queue.pop(0)
                    if tick > onset_tick:
                        notes_raw.append((onset_tick, tick, pitch, velocity))
            elif kind == "pedal":
                pedals_raw.append((tick, payload))
        for (channel, pitch), queue in open_notes.items():
            for onset_tick, velocity in queue:
                warnings.warn(f"unpaired note-on (pitch {pitch}) closed at end of track")
                if final_tick > onset_tick:
                    notes_raw.append((onset_tick, final_tick, pitch, velocity))

    notes_raw.sort(key=lambda n: (n[0], n[2]))
    notes = []
    for i, (on_t, off_t, pitch, velocity) in enumerate(notes_raw):
        if not PIANO_PITCH_MIN <= pitch <= PIANO_PITCH_MAX:
            warnings.warn(f"note {i} pitch {pitch} outside the 88-key range")
        notes.append(NoteEvent(i, tmap.to_seconds(on_t), tmap.to_seconds(off_t), pitch, velocity))

    pedals_raw.sort(key=lambda p: p[0])
    pedals = [PedalEvent(tmap.to_seconds(t), v) for t, v in pedals_raw]

    return Performance(notes=notes, pedals=pedals, ticks_per_quarter=tpq,
                       tempo_map=[(t, q) for t, q in zip(tmap.ticks, tmap.tempi)])


# ---------------------------------------------------------------------------
# writing


def _write_varlen(value):
    out = bytearray([value & 0x7F])
    value >>= 7
    while value:
        out.insert(0, 0x80 | (value & 0x7F))
        value >>= 7
    return bytes(out)


def write_midi(p: Performance) -> bytes:
    """Serialize a Performance as a single-track (type 0) SMF byte string."""
    tmap = _TempoMap(p.tempo_map, p.ticks_per_quarter)
    # priority keeps offs before ons at the same tick so re-strikes survive
    events = []  # (tick, priority, bytes)
    for tick, tempo in zip(tmap.ticks, tmap.tempi):
        events.append((tick, 0, bytes([0xFF, 0x51, 0x03]) + tempo.to_bytes(3, "big")))
    for pedal in p.pedals:
        events.append((tmap.to_ticks(pedal.time_s), 1, bytes([0xB0, 64, pedal.value])))
    for note in p.notes:
        on_tick = tmap.to_ticks(note.onset_s)
        off_tick = max(tmap.to_ticks(note.offset_s), on_tick + 1)
        events.append((on_tick, 3, bytes([0x90, note.pitch, note.velocity])))
        events.append((off_tick, 2, bytes([0x80, note.pitch, 0])))
    events.sort(key=lambda e: (e[0], e[1]))

    body = bytearray()
    prev_tick = 0
    for tick, _, msg in events:
        body += _write_varlen(tick - prev_tick)
        body += msg
        prev_tick = tick
    body += _write_varlen(0) + bytes([0xFF, 0x2F, 0x00])

    out = io.BytesIO()
    out.write(b"MThd" + (6).to_bytes(4, "big"))
    out.write((0).to_bytes(2, "big") + (1).to_bytes(2, "big"))
    out.write(p.ticks_per_quarter.to_bytes(2, "big"))
    out.write(b"MTrk" + len(body).to_bytes(4, "big") + bytes(body))
    return out.getvalue()


# ---------------------------------------------------------------------------
# pedal extension and hand split


def apply_sustain_extension(p: Performance, threshold: int = 64) -> list[NoteEvent]:
    """Extend note offsets to the sustain-pedal release time.

    A note whose pedal value is >= threshold at its offset is held until the
    first pedal event below the threshold at or after the offset (or the last
    event time if the pedal never releases). Extended notes are truncated at
    the next onset of the same pitch (re-strike).
    """
    if not p.pedals:
        return list(p.notes)
    pedal_times = [e.time_s for e in p.pedals]
    pedal_values = [e.value for e in p.pedals]
    end_of_events = max([e.time_s for e in p.pedals] + [n.offset_s for n in p.notes])

    def pedal_value_at(t):
        value = 0
        for pt, pv in zip(pedal_times, pedal_values):
            if pt <= t:
                value = pv
            else:
                break
        return value

    def release_time_after(t):
        for pt, pv in zip(pedal_times, pedal_values):
            if pt >= t and pv < threshold:
                return pt
        return end_of_events

    extended = []
    for note in p.notes:
        offset = note.offset_s
        if pedal_value_at(offset) >= threshold:
            offset = max(offset, release_time_after(offset))
        extended.append(replace(note, offset_s=offset))

    # re-strike: truncate at next same-pitch onset
    by_pitch: dict[int, list[int]] = {}
    for i, note in enumerate(extended):
        by_pitch.setdefault(note.pitch, []).append(i)
    result = list(extended)
    for indices in by_pitch.values():
        indices.sort(key=lambda i: extended[i].onset_s)
        for a, b in zip(indices, indices[1:]):
            next_onset = extended[b].onset_s
            if result[a].offset_s > next_onset > result[a].onset_s:
                result[a] = replace(result[a], offset_s=next_onset)
    return result


class HandSplitError(ValueError):
    def __init__(self, unresolved_ids):
        super().__init__(f"notes without hand assignment: {sorted(unresolved_ids)}")
        self.unresolved_ids = sorted(unresolved_ids)


def split_by_hand(p: Performance, hand_of: dict[int, str]) -> tuple[Performance, Performance]:
    """Partition notes by hand label ('L'/'R'); pedal events are copied to both."""
    unresolved = [n.note_id for n in p.notes if hand_of.get(n.note_id) not in ("L", "R")]
    if unresolved:
        raise HandSplitError(unresolved)
    left = [n for n in p.notes if hand_of[n.note_id] == "L"]
    right = [n for n in p.notes if hand_of[n.note_id] == "R"]
    make = lambda notes: Performance(notes=notes, pedals=list(p.pedals),
                                     ticks_per_quarter=p.ticks_per_quarter,
                                     tempo_map=list(p.tempo_map))
    return make(left), make(right)


# ---------------------------------------------------------------------------
# JSON lines export


def notes_to_jsonl(notes) -> str:
    lines = []
    for n in notes:
        lines.append(json.dumps({"note_id": n.note_id, "onset_s": n.onset_s,
                                 "offset_s": n.offset_s, "pitch": n.pitch,
                                 "velocity": n.velocity}))
    return "\n".join(lines) + ("\n" if lines else "")


def notes_from_jsonl(text: str) -> list[NoteEvent]:
    notes = []
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        notes.append(NoteEvent(obj["note_id"], obj["onset_s"], obj["offset_s"],
                               obj["pitch"], obj["velocity"]))
    return notes
