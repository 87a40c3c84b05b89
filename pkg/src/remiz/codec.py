"""Encoder, decoder, and validator for the bar-wise token layout.

Layout per bar: optional s/t header tokens, then one track sequence per
instrument class ordered by the track's average pitch from high to low (ties
by class id ascending), each track being its i token followed by (o, p, d)
triplets sorted by position ascending then pitch descending; the bar ends
with b-1.

The encoder always emits a full (o, p, d) triplet per note. The decoder also
accepts position persistence (an o token holds until the next o, i, or b-1)
and any note ordering; re-encoding a decoded stream therefore yields the
canonical form. The validator reports violations instead of raising so whole
files can be audited in one pass.
"""

from __future__ import annotations

from typing import Iterable, NamedTuple

from .instruments import DRUM_CLASS_ID, N_CLASSES
from .score import Bar, Note, Score, average_pitch, bar_length_units
from .tokens import (
    BAR_TOKEN,
    EOS_TOKEN,
    KIND_BAR,
    KIND_DURATION,
    KIND_INSTRUMENT,
    KIND_PITCH,
    KIND_POSITION,
    KIND_SPECIAL,
    KIND_TEMPO,
    KIND_TIMESIG,
    DEFAULT_TEMPO_BPM,
    DEFAULT_TIME_SIGNATURE,
    Token,
    id_to_tempo,
    id_to_timesig,
    in_range,
    make_duration,
    make_instrument,
    make_pitch,
    make_position,
    tempo_to_id,
    timesig_to_id,
)

MAX_TIMESIG_ID = 80  # ids at or above this are reserved


def track_order(bar: Bar) -> list[int]:
    """Class ids of a bar's tracks in encoding order."""
    return sorted(
        bar.tracks, key=lambda c: (-average_pitch(bar.tracks[c]), c)
    )


def encode_bar(bar: Bar, include_timesig_tempo: bool = False) -> list[Token]:
    out: list[Token] = []
    if include_timesig_tempo:
        out.append(Token(KIND_TIMESIG, timesig_to_id(bar.time_signature)))
        out.append(Token(KIND_TEMPO, tempo_to_id(bar.tempo_bpm)))
    for class_id in track_order(bar):
        out.append(make_instrument(class_id))
        for note in bar.tracks[class_id]:
            out.append(make_position(note.position))
            out.append(make_pitch(note.pitch))
            out.append(make_duration(note.duration))
    out.append(BAR_TOKEN)
    return out


def encode_score(score: Score, include_timesig_tempo: bool = False) -> list[Token]:
    out: list[Token] = []
    for bar in score.bars:
        out.extend(encode_bar(bar, include_timesig_tempo))
    return out


class DecodeError(ValueError):
    """Raised when a token stream cannot be decoded; carries the offending
    token index."""

    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"token {index}: {message}")
        self.index = index


class _BarBuilder:
    """Accumulates one bar's worth of decoded state."""

    __slots__ = ("sig", "tempo", "tracks", "cls", "pos", "pending", "dirty")

    def __init__(self, sig: tuple[int, int], tempo: float) -> None:
        self.sig = sig
        self.tempo = tempo
        self.tracks: dict[int, list[Note]] = {}
        self.cls: int | None = None
        self.pos: int | None = None
        self.pending: int | None = None  # pitch awaiting its duration
        self.dirty = False  # any i/o/p/d seen in this bar


def decode_tokens(seq: Iterable[Token], source_id: str = "") -> Score:
    tokens = list(seq)
    if tokens and tokens[-1] == EOS_TOKEN:
        tokens = tokens[:-1]
    if not tokens:
        raise DecodeError(0, "empty stream")

    bars: list[Bar] = []
    state = _BarBuilder(DEFAULT_TIME_SIGNATURE, DEFAULT_TEMPO_BPM)

    def close_pending(index: int) -> None:
        if state.pending is not None:
            raise DecodeError(index, "pitch token without a duration")

    for index, token in enumerate(tokens):
        if not in_range(token):
            raise DecodeError(index, f"token out of range: {token.kind}-{token.value}")
        kind = token.kind
        if kind == KIND_SPECIAL:
            raise DecodeError(index, "unexpected special token")
        if kind == KIND_TIMESIG:
            if state.dirty:
                raise DecodeError(index, "time signature after bar content")
            try:
                state.sig = id_to_timesig(token.value)
                bar_length_units(state.sig)
            except ValueError as exc:
                raise DecodeError(index, str(exc)) from None
        elif kind == KIND_TEMPO:
            if state.dirty:
                raise DecodeError(index, "tempo after bar content")
            state.tempo = id_to_tempo(token.value)
        elif kind == KIND_INSTRUMENT:
            close_pending(index)
            if token.value >= N_CLASSES:
                raise DecodeError(index, f"unknown instrument class: {token.value}")
            state.cls = token.value
            state.pos = None
            state.dirty = True
            state.tracks.setdefault(state.cls, [])
        elif kind == KIND_POSITION:
            close_pending(index)
            if state.cls is None:
                raise DecodeError(index, "position token before any instrument")
            if token.value >= bar_length_units(state.sig):
                raise DecodeError(
                    index,
                    f"position {token.value} outside "
                    f"{bar_length_units(state.sig)}-unit bar",
                )
            state.pos = token.value
            state.dirty = True
        elif kind == KIND_PITCH:
            close_pending(index)
            if state.cls is None:
                raise DecodeError(index, "pitch token before any instrument")
            if state.pos is None:
                raise DecodeError(index, "pitch token before any position")
            is_drum_pitch = token.value >= 128
            if is_drum_pitch != (state.cls == DRUM_CLASS_ID):
                raise DecodeError(
                    index, f"pitch {token.value} invalid for class {state.cls}"
                )
            state.pending = token.value
            state.dirty = True
        elif kind == KIND_DURATION:
            if state.pending is None:
                raise DecodeError(index, "duration token without a pitch")
            assert state.cls is not None and state.pos is not None
            state.tracks[state.cls].append(
                Note(state.pos, state.pending, token.value + 1)
            )
            state.pending = None
        else:  # bar line
            close_pending(index)
            bars.append(
                Bar(
                    state.sig,
                    state.tempo,
                    {c: tuple(notes) for c, notes in state.tracks.items()},
                )
            )
            state = _BarBuilder(state.sig, state.tempo)

    if state.dirty:
        raise DecodeError(len(tokens) - 1, "unterminated bar")
    if not bars:
        raise DecodeError(len(tokens) - 1, "stream contains no bar line")
    return Score(tuple(bars), source_id)


class Violation(NamedTuple):
    index: int
    rule: str


class _TrackState:
    __slots__ = ("class_id", "start_index", "notes", "keys")

    def __init__(self, class_id: int, start_index: int) -> None:
        self.class_id = class_id
        self.start_index = start_index
        self.notes: list[tuple[int, int]] = []  # (position, pitch)
        self.keys: set[tuple[int, int]] = set()


def validate_stream(seq: Iterable[Token]) -> list[Violation]:
    """Single-pass grammar and ordering audit; empty result means conformant.

    A single terminal <EOS> is tolerated so corpus lines validate as-is.
    """
    tokens = list(seq)
    out: list[Violation] = []
    if tokens and tokens[-1] == EOS_TOKEN:
        tokens = tokens[:-1]
    if not tokens:
        return [Violation(0, "empty-stream")]

    sig = DEFAULT_TIME_SIGNATURE
    bar_count = 0
    bar_dirty = False
    sig_seen = False
    tempo_seen = False
    instruments: set[int] = set()
    prev_track: _TrackState | None = None
    track: _TrackState | None = None
    pos: int | None = None
    pending = False  # pitch awaiting duration
    last_pitch: int | None = None

    def flag(index: int, rule: str) -> None:
        out.append(Violation(index, rule))

    def close_track(index: int) -> None:
        nonlocal prev_track, track
        if track is None:
            return
        if not track.notes:
            flag(track.start_index, "empty-track")
        elif prev_track is not None and prev_track.notes:
            prev_avg = sum(p for _, p in prev_track.notes) / len(prev_track.notes)
            cur_avg = sum(p for _, p in track.notes) / len(track.notes)
            if prev_avg < cur_avg or (
                prev_avg == cur_avg and prev_track.class_id > track.class_id
            ):
                flag(track.start_index, "track-order")
        prev_track = track
        track = None

    for index, token in enumerate(tokens):
        if not in_range(token):
            flag(index, "value-range")
            continue
        kind = token.kind
        if kind == KIND_SPECIAL:
            flag(index, "unexpected-special")
            continue
        if kind == KIND_TIMESIG:
            if bar_dirty or sig_seen:
                flag(index, "misplaced-timesig")
            sig_seen = True
            if token.value >= MAX_TIMESIG_ID:
                flag(index, "reserved-timesig")
            else:
                candidate = id_to_timesig(token.value)
                try:
                    bar_length_units(candidate)
                except ValueError:
                    flag(index, "bar-too-long")
                else:
                    sig = candidate
            continue
        if kind == KIND_TEMPO:
            if bar_dirty or tempo_seen:
                flag(index, "misplaced-tempo")
            tempo_seen = True
            continue
        if kind == KIND_INSTRUMENT:
            if pending:
                flag(index, "missing-duration")
                pending = False
            bar_dirty = True
            close_track(index)
            if token.value >= N_CLASSES:
                flag(index, "unknown-instrument")
            if token.value in instruments:
                flag(index, "duplicate-instrument")
            instruments.add(token.value)
            track = _TrackState(token.value, index)
            pos = None
            last_pitch = None
            continue
        if kind == KIND_POSITION:
            if pending:
                flag(index, "missing-duration")
                pending = False
            bar_dirty = True
            if track is None:
                flag(index, "note-before-instrument")
                continue
            if token.value >= bar_length_units(sig):
                flag(index, "position-range")
            if pos is not None and token.value < pos:
                flag(index, "note-order")
            if token.value != pos:
                last_pitch = None
            pos = token.value
            continue
        if kind == KIND_PITCH:
            if pending:
                flag(index, "missing-duration")
            bar_dirty = True
            if track is None:
                flag(index, "note-before-instrument")
                continue
            if pos is None:
                flag(index, "pitch-before-position")
                continue
            if track.class_id < N_CLASSES:
                is_drum_pitch = token.value >= 128
                if is_drum_pitch != (track.class_id == DRUM_CLASS_ID):
                    flag(index, "pitch-domain")
            if (pos, token.value) in track.keys:
                flag(index, "duplicate-note")
            elif last_pitch is not None and token.value > last_pitch:
                flag(index, "note-order")
            track.keys.add((pos, token.value))
            track.notes.append((pos, token.value))
            last_pitch = token.value
            pending = True
            continue
        if kind == KIND_DURATION:
            if not pending:
                flag(index, "duration-without-pitch")
            pending = False
            bar_dirty = True
            continue
        # bar line
        if pending:
            flag(index, "missing-duration")
            pending = False
        close_track(index)
        prev_track = None
        bar_count += 1
        bar_dirty = False
        sig_seen = False
        tempo_seen = False
        instruments.clear()
        pos = None
        last_pitch = None

    if bar_dirty or pending or track is not None:
        flag(len(tokens) - 1, "unterminated-bar")
    elif bar_count == 0:
        flag(0, "empty-stream")
    return out
