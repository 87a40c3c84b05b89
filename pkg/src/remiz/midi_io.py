"""Standard MIDI File I/O and grid quantization.

Design notes
------------
- Formats 0 and 1 with PPQN division only; SMPTE division and format 2 raise
  UnsupportedSmfError. Parse errors carry the byte offset they occurred at.
- Note pairing is FIFO per (channel, pitch) within one track chunk; a note-on
  with velocity 0 closes like a note-off; note-ons still open at end of track
  are closed there.
- Velocity is parsed and discarded; writes emit a fixed velocity of 80.
- Onsets snap to the global 48th-note grid rounding half DOWN; durations
  round to the nearest unit, clamped to 1..128; a note belongs to the bar
  containing its quantized onset and keeps its duration across bar lines.
- The bar span of a piece is max(track 0's end-of-track tick, last onset + 1),
  so trailing empty bars written by write_smf survive a round trip while a
  final note ringing past the last bar line does not invent an extra bar.
- A mid-bar time-signature change cuts the current bar short and starts a new
  bar at the change point.
- write_smf lays out one conductor track plus one track per instrument class;
  overlapping same-pitch notes within a class are split across extra layer
  tracks so FIFO pairing reads back exact durations.
"""

from __future__ import annotations

from bisect import bisect_right
from dataclasses import dataclass
from typing import NamedTuple

from .instruments import DRUM_CLASS_ID, canonical_program, class_of
from .score import Bar, Note, Score, bar_length_units
from .tokens import DEFAULT_TEMPO_BPM, DEFAULT_TIME_SIGNATURE

TICKS_PER_QUARTER_OUT = 480
_UNIT_TICKS_OUT = TICKS_PER_QUARTER_OUT // 12
_WRITE_VELOCITY = 80
# channels for pitched tracks in write order; 9 is reserved for drums
_PITCHED_CHANNELS = tuple(c for c in range(16) if c != 9)


class SmfParseError(ValueError):
    def __init__(self, offset: int, message: str) -> None:
        super().__init__(f"byte {offset}: {message}")
        self.offset = offset


class UnsupportedSmfError(ValueError):
    pass


class UnrepresentableBarError(ValueError):
    def __init__(self, bar_index: int, message: str) -> None:
        super().__init__(f"bar {bar_index}: {message}")
        self.bar_index = bar_index


class RawNoteEvent(NamedTuple):
    onset_tick: int
    duration_ticks: int
    midi_pitch: int
    channel: int
    program: int
    is_drum: bool


class SmfData(NamedTuple):
    ticks_per_quarter: int
    events: tuple[RawNoteEvent, ...]
    tempo_changes: tuple[tuple[int, float], ...]
    timesig_changes: tuple[tuple[int, tuple[int, int]], ...]
    conductor_end_tick: int


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def need(self, n: int) -> None:
        if self.pos + n > len(self.data):
            raise SmfParseError(len(self.data), "unexpected end of data")

    def bytes(self, n: int) -> bytes:
        self.need(n)
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def u8(self) -> int:
        self.need(1)
        value = self.data[self.pos]
        self.pos += 1
        return value

    def u16(self) -> int:
        return int.from_bytes(self.bytes(2), "big")

    def u32(self) -> int:
        return int.from_bytes(self.bytes(4), "big")

    def vlq(self) -> int:
        value = 0
        for _ in range(4):
            byte = self.u8()
            value = (value << 7) | (byte & 0x7F)
            if not byte & 0x80:
                return value
        raise SmfParseError(self.pos, "variable-length quantity too long")


def parse_smf(data: bytes) -> SmfData:
    reader = _Reader(data)
    if reader.bytes(4) != b"MThd":
        raise SmfParseError(0, "missing MThd header")
    header_len = reader.u32()
    if header_len < 6:
        raise SmfParseError(reader.pos - 4, f"bad header length {header_len}")
    smf_format = reader.u16()
    n_tracks = reader.u16()
    division = reader.u16()
    reader.bytes(header_len - 6)
    if smf_format not in (0, 1):
        raise UnsupportedSmfError(f"unsupported SMF format {smf_format}")
    if division & 0x8000:
        raise UnsupportedSmfError("SMPTE division is not supported")
    if division == 0:
        raise SmfParseError(reader.pos - 2, "zero ticks per quarter")

    events: list[RawNoteEvent] = []
    tempo_changes: list[tuple[int, float]] = []
    timesig_changes: list[tuple[int, tuple[int, int]]] = []
    conductor_end = 0
    track_index = 0
    while track_index < n_tracks and reader.pos < len(reader.data):
        chunk_type = reader.bytes(4)
        chunk_len = reader.u32()
        chunk_end = reader.pos + chunk_len
        if chunk_type != b"MTrk":
            reader.bytes(chunk_len)
            continue
        end_tick = _parse_track(
            reader, chunk_end, events, tempo_changes, timesig_changes
        )
        if track_index == 0:
            conductor_end = end_tick
        track_index += 1
    if track_index < n_tracks:
        raise SmfParseError(reader.pos, "missing track chunk")
    tempo_changes.sort(key=lambda c: c[0])
    timesig_changes.sort(key=lambda c: c[0])
    return SmfData(
        division,
        tuple(events),
        tuple(tempo_changes),
        tuple(timesig_changes),
        conductor_end,
    )


def _parse_track(
    reader: _Reader,
    chunk_end: int,
    events: list[RawNoteEvent],
    tempo_changes: list[tuple[int, float]],
    timesig_changes: list[tuple[int, tuple[int, int]]],
) -> int:
    tick = 0
    status = 0
    programs = [0] * 16
    open_notes: dict[tuple[int, int], list[tuple[int, int]]] = {}
    end_tick: int | None = None

    def close(channel: int, pitch: int, off_tick: int) -> None:
        queue = open_notes.get((channel, pitch))
        if not queue:
            return
        onset, program = queue.pop(0)
        events.append(
            RawNoteEvent(
                onset,
                max(0, off_tick - onset),
                pitch,
                channel,
                program,
                channel == 9,
            )
        )

    while reader.pos < chunk_end:
        tick += reader.vlq()
        byte = reader.u8()
        if byte == 0xFF:
            status = 0
            meta_type = reader.u8()
            length = reader.vlq()
            payload = reader.bytes(length)
            if meta_type == 0x2F:
                end_tick = tick
                break
            if meta_type == 0x51 and length == 3:
                us = int.from_bytes(payload, "big")
                if us > 0:
                    tempo_changes.append((tick, 60_000_000.0 / us))
            elif meta_type == 0x58 and length >= 2:
                timesig_changes.append((tick, (payload[0], 1 << payload[1])))
            continue
        if byte in (0xF0, 0xF7):
            status = 0
            reader.bytes(reader.vlq())
            continue
        if byte & 0x80:
            status = byte
            data1 = reader.u8()
        else:
            if not status & 0x80:
                raise SmfParseError(reader.pos - 1, f"stray data byte {byte:#x}")
            data1 = byte
        kind = status & 0xF0
        channel = status & 0x0F
        if kind in (0x80, 0x90, 0xA0, 0xB0, 0xE0):
            data2 = reader.u8()
        elif kind in (0xC0, 0xD0):
            data2 = 0
        else:
            raise SmfParseError(reader.pos - 1, f"bad status byte {status:#x}")
        if kind == 0xC0:
            programs[channel] = data1
        elif kind == 0x90 and data2 > 0:
            open_notes.setdefault((channel, data1), []).append(
                (tick, programs[channel])
            )
        elif kind == 0x80 or (kind == 0x90 and data2 == 0):
            close(channel, data1, tick)

    for channel, pitch in sorted(open_notes):
        while open_notes[(channel, pitch)]:
            close(channel, pitch, max(tick, end_tick or 0))
    reader.pos = chunk_end
    return end_tick if end_tick is not None else tick


def _to_units_half_down(value: int, ticks_per_quarter: int) -> int:
    q, r = divmod(value * 12, ticks_per_quarter)
    return q + 1 if 2 * r > ticks_per_quarter else q


@dataclass(frozen=True, slots=True)
class RawNote:
    position: int
    pitch: int  # token-space
    duration: int
    program: int
    is_drum: bool


@dataclass(frozen=True, slots=True)
class RawBar:
    time_signature: tuple[int, int]
    tempo_bpm: float
    notes: tuple[RawNote, ...]


def _effective_changes(
    changes: tuple[tuple[int, object], ...], default: object, tpq: int
) -> list[tuple[int, object]]:
    # ticks -> grid units, same-unit duplicates resolved to the last one
    by_unit: dict[int, object] = {}
    for tick, value in changes:
        by_unit[_to_units_half_down(tick, tpq)] = value
    by_unit.setdefault(0, default)
    return sorted(by_unit.items())


def quantize(data: SmfData) -> tuple[RawBar, ...]:
    """Snap parsed events to the 48th-note grid and slice them into bars."""
    tpq = data.ticks_per_quarter
    sigs = _effective_changes(data.timesig_changes, DEFAULT_TIME_SIGNATURE, tpq)
    tempos = _effective_changes(data.tempo_changes, DEFAULT_TEMPO_BPM, tpq)

    onsets = [_to_units_half_down(e.onset_tick, tpq) for e in data.events]
    span = max(
        _to_units_half_down(data.conductor_end_tick, tpq),
        max(onsets) + 1 if onsets else 0,
        1,
    )

    bar_starts: list[int] = []
    bar_sigs: list[tuple[int, int]] = []
    for seg_index, (seg_start, sig) in enumerate(sigs):
        seg_end = sigs[seg_index + 1][0] if seg_index + 1 < len(sigs) else span
        seg_end = min(seg_end, span)
        if seg_start >= seg_end:
            continue
        try:
            length = bar_length_units(sig)
        except ValueError as exc:
            raise UnrepresentableBarError(len(bar_starts), str(exc)) from None
        start = seg_start
        while start < seg_end:
            bar_starts.append(start)
            bar_sigs.append(sig)
            start += length

    tempo_index = 0
    bar_tempos: list[float] = []
    for start in bar_starts:
        while (
            tempo_index + 1 < len(tempos) and tempos[tempo_index + 1][0] <= start
        ):
            tempo_index += 1
        bar_tempos.append(tempos[tempo_index][1])

    bar_notes: list[list[RawNote]] = [[] for _ in bar_starts]
    for event, onset in zip(data.events, onsets):
        duration = max(
            1, min(128, _to_units_half_down(event.duration_ticks, tpq))
        )
        pitch = event.midi_pitch + 128 if event.is_drum else event.midi_pitch
        bar = bisect_right(bar_starts, onset) - 1
        bar_notes[bar].append(
            RawNote(
                onset - bar_starts[bar],
                pitch,
                duration,
                event.program,
                event.is_drum,
            )
        )

    return tuple(
        RawBar(sig, tempo, tuple(notes))
        for sig, tempo, notes in zip(bar_sigs, bar_tempos, bar_notes)
    )


def group_instruments(raw_bars: tuple[RawBar, ...], source_id: str = "") -> Score:
    """Re-key raw notes by instrument class and merge same-class tracks."""
    bars = []
    for raw in raw_bars:
        tracks: dict[int, list[Note]] = {}
        for note in raw.notes:
            class_id = class_of(note.program, note.is_drum)
            tracks.setdefault(class_id, []).append(
                Note(note.position, note.pitch, note.duration)
            )
        bars.append(
            Bar(
                raw.time_signature,
                raw.tempo_bpm,
                {c: tuple(n) for c, n in tracks.items()},
            )
        )
    return Score(tuple(bars), source_id)


def score_from_midi_bytes(data: bytes, source_id: str = "") -> Score:
    return group_instruments(quantize(parse_smf(data)), source_id)


def _vlq(value: int) -> bytes:
    out = bytearray([value & 0x7F])
    value >>= 7
    while value:
        out.insert(0, 0x80 | (value & 0x7F))
        value >>= 7
    return bytes(out)


def _chunk(chunk_type: bytes, payload: bytes) -> bytes:
    return chunk_type + len(payload).to_bytes(4, "big") + payload


def _track_bytes(events: list[tuple[int, int, bytes]], end_tick: int) -> bytes:
    """events: (tick, priority, message) triples; appends end-of-track."""
    events = sorted(events, key=lambda e: (e[0], e[1]))
    out = bytearray()
    tick = 0
    for event_tick, _, message in events:
        out += _vlq(event_tick - tick)
        out += message
        tick = event_tick
    out += _vlq(max(0, end_tick - tick)) + b"\xff\x2f\x00"
    return _chunk(b"MTrk", bytes(out))


def write_smf(score: Score) -> bytes:
    bar_starts: list[int] = []
    total_units = 0
    for bar in score.bars:
        bar_starts.append(total_units)
        total_units += bar.length_units
    total_ticks = total_units * _UNIT_TICKS_OUT

    conductor: list[tuple[int, int, bytes]] = []
    prev_sig: tuple[int, int] | None = None
    prev_tempo: float | None = None
    for bar, start in zip(score.bars, bar_starts):
        tick = start * _UNIT_TICKS_OUT
        if bar.time_signature != prev_sig:
            num, den = bar.time_signature
            conductor.append(
                (tick, 0, bytes([0xFF, 0x58, 4, num, den.bit_length() - 1, 24, 8]))
            )
            prev_sig = bar.time_signature
        if bar.tempo_bpm != prev_tempo:
            us = round(60_000_000 / bar.tempo_bpm)
            conductor.append(
                (tick, 1, bytes([0xFF, 0x51, 3]) + us.to_bytes(3, "big"))
            )
            prev_tempo = bar.tempo_bpm

    tracks = [_track_bytes(conductor, total_ticks)]
    classes = score.classes()
    for class_index, class_id in enumerate(classes):
        if class_id == DRUM_CLASS_ID:
            channel = 9
        else:
            channel = _PITCHED_CHANNELS[class_index % len(_PITCHED_CHANNELS)]
        notes: list[tuple[int, int, int]] = []  # (on_tick, off_tick, pitch)
        for bar, start in zip(score.bars, bar_starts):
            for note in bar.tracks.get(class_id, ()):
                on = (start + note.position) * _UNIT_TICKS_OUT
                pitch = note.pitch - 128 if class_id == DRUM_CLASS_ID else note.pitch
                notes.append((on, on + note.duration * _UNIT_TICKS_OUT, pitch))
        if not notes:
            continue
        # split same-pitch overlaps into layer tracks so FIFO pairing is exact
        layers: list[list[tuple[int, int, int]]] = []
        layer_last_off: list[dict[int, int]] = []
        for on, off, pitch in sorted(notes, key=lambda n: (n[0], -n[2])):
            for layer_index, last_off in enumerate(layer_last_off):
                if on >= last_off.get(pitch, 0):
                    layers[layer_index].append((on, off, pitch))
                    last_off[pitch] = off
                    break
            else:
                layers.append([(on, off, pitch)])
                layer_last_off.append({pitch: off})
        for layer in layers:
            events: list[tuple[int, int, bytes]] = [
                (0, 0, bytes([0xC0 | channel, canonical_program(class_id)]))
            ]
            last_tick = 0
            for on, off, pitch in layer:
                events.append(
                    (on, 2, bytes([0x90 | channel, pitch, _WRITE_VELOCITY]))
                )
                events.append((off, 1, bytes([0x80 | channel, pitch, 0])))
                last_tick = max(last_tick, off)
            tracks.append(_track_bytes(events, last_tick))

    header = (
        (1).to_bytes(2, "big")
        + len(tracks).to_bytes(2, "big")
        + TICKS_PER_QUARTER_OUT.to_bytes(2, "big")
    )
    return _chunk(b"MThd", header) + b"".join(tracks)


def score_to_midi_bytes(score: Score) -> bytes:
    return write_smf(score)
