"""Quantized in-memory score model.

Design notes
------------
- Time lives on a 48th-note grid: one unit is 1/48 of a whole note, so a
  quarter note spans 12 units and a 4/4 bar spans 48.
- Notes belong to the bar their onset falls in and keep their full duration
  even when it crosses the bar line; nothing is ever cut.
- Tracks are keyed by instrument class id (see instruments.py), one track per
  class per bar. Pitches are token-space: 0-127 for pitched classes, 128 +
  MIDI pitch for drums.
- Construction normalizes eagerly so every downstream consumer can rely on
  sorted, duplicate-free tracks.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .instruments import DRUM_CLASS_ID, N_CLASSES
from .tokens import snap_tempo

MAX_BAR_UNITS = 128
MAX_DURATION_UNITS = 128
UNITS_PER_QUARTER = 12

TIME_SIGNATURE_DENOMINATORS = (1, 2, 4, 8, 16)


def bar_length_units(time_signature: tuple[int, int]) -> int:
    """Length of one bar in grid units, validating the signature."""
    num, den = time_signature
    if not 1 <= num <= 16:
        raise ValueError(f"time signature numerator out of range: {num}")
    if den not in TIME_SIGNATURE_DENOMINATORS:
        raise ValueError(f"unsupported time signature denominator: {den}")
    length = num * 48 // den
    if length > MAX_BAR_UNITS:
        raise ValueError(f"bar of {num}/{den} exceeds {MAX_BAR_UNITS} units")
    return length


@dataclass(frozen=True, slots=True, order=True)
class Note:
    """One note: onset position within its bar, token-space pitch, duration."""

    position: int
    pitch: int
    duration: int

    def __post_init__(self) -> None:
        if not 0 <= self.position < MAX_BAR_UNITS:
            raise ValueError(f"position out of range: {self.position}")
        if not 0 <= self.pitch <= 255:
            raise ValueError(f"pitch out of range: {self.pitch}")
        if not 1 <= self.duration <= MAX_DURATION_UNITS:
            raise ValueError(f"duration out of range: {self.duration}")


def _normalize_track(notes: tuple[Note, ...]) -> tuple[Note, ...]:
    # Merge duplicate (position, pitch) onsets keeping the longest duration,
    # then order by position ascending, pitch descending.
    best: dict[tuple[int, int], int] = {}
    for note in notes:
        key = (note.position, note.pitch)
        if note.duration > best.get(key, 0):
            best[key] = note.duration
    return tuple(
        Note(pos, pitch, best[(pos, pitch)])
        for pos, pitch in sorted(best, key=lambda k: (k[0], -k[1]))
    )


@dataclass(frozen=True, slots=True)
class Bar:
    """One bar: signature, tempo, and per-class note tracks."""

    time_signature: tuple[int, int] = (4, 4)
    tempo_bpm: float = 120.0
    tracks: dict[int, tuple[Note, ...]] = field(default_factory=dict)

    def __post_init__(self) -> None:
        length = bar_length_units(self.time_signature)
        if self.tempo_bpm <= 0:
            raise ValueError(f"tempo out of range: {self.tempo_bpm}")
        # Tempo lives on the 49-bin token grid; snapping here makes encode and
        # decode exact inverses for every constructible Bar.
        object.__setattr__(self, "tempo_bpm", snap_tempo(self.tempo_bpm))
        normalized: dict[int, tuple[Note, ...]] = {}
        for class_id in sorted(self.tracks):
            if not 0 <= class_id < N_CLASSES:
                raise ValueError(f"instrument class out of range: {class_id}")
            track = _normalize_track(tuple(self.tracks[class_id]))
            if not track:
                continue
            for note in track:
                if note.position >= length:
                    raise ValueError(
                        f"position {note.position} outside {length}-unit bar"
                    )
                is_drum_pitch = note.pitch >= 128
                if is_drum_pitch != (class_id == DRUM_CLASS_ID):
                    raise ValueError(
                        f"pitch {note.pitch} invalid for class {class_id}"
                    )
            normalized[class_id] = track
        object.__setattr__(self, "tracks", normalized)

    @property
    def length_units(self) -> int:
        return bar_length_units(self.time_signature)

    def is_empty(self) -> bool:
        return not self.tracks


@dataclass(frozen=True, slots=True)
class Score:
    """A song: a non-empty bar sequence plus an opaque source identifier.
    The identifier is provenance metadata and takes no part in equality."""

    bars: tuple[Bar, ...]
    source_id: str = field(default="", compare=False)

    def __post_init__(self) -> None:
        object.__setattr__(self, "bars", tuple(self.bars))
        if not self.bars:
            raise ValueError("score must contain at least one bar")

    def classes(self) -> tuple[int, ...]:
        present = {class_id for bar in self.bars for class_id in bar.tracks}
        return tuple(sorted(present))


def average_pitch(notes: tuple[Note, ...]) -> float:
    """Mean token-space pitch; caller guarantees notes is non-empty."""
    return sum(n.pitch for n in notes) / len(notes)


def filter_classes(score: Score, keep: set[int]) -> Score:
    """Copy of score with only the given instrument classes; bars are kept
    in place even when emptied."""
    bars = tuple(
        Bar(
            bar.time_signature,
            bar.tempo_bpm,
            {c: t for c, t in bar.tracks.items() if c in keep},
        )
        for bar in score.bars
    )
    return Score(bars, score.source_id)
