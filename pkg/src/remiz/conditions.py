"""Extraction operators over segments.

I(·) lists the instruments of a segment in voice order: average token-space
pitch from high to low, ties by class id ascending (the same ordering the
encoder uses for tracks, so I of an encoded segment equals its track order).
C(·) flattens a segment to an instrument-free content sequence: notes of all
tracks pooled per bar, duplicate (position, pitch) merged keeping the longest
duration, sorted by position then pitch descending, bars joined by b-1.
M(·) is the per-position top note of the highest pitched non-drum track.
"""

from __future__ import annotations

from .instruments import DRUM_CLASS_ID
from .score import Score
from .tokens import (
    BAR_TOKEN,
    KIND_DURATION,
    KIND_PITCH,
    KIND_POSITION,
    Token,
    make_duration,
    make_instrument,
    make_pitch,
    make_position,
)


def class_average_pitches(segment: Score) -> dict[int, float]:
    sums: dict[int, int] = {}
    counts: dict[int, int] = {}
    for bar in segment.bars:
        for class_id, notes in bar.tracks.items():
            sums[class_id] = sums.get(class_id, 0) + sum(n.pitch for n in notes)
            counts[class_id] = counts.get(class_id, 0) + len(notes)
    return {c: sums[c] / counts[c] for c in sums}


def voice_order(segment: Score) -> list[int]:
    averages = class_average_pitches(segment)
    return sorted(averages, key=lambda c: (-averages[c], c))


def extract_instruments(segment: Score) -> list[Token]:
    """I(·): one token per instrument class present, in voice order."""
    order = voice_order(segment)
    if not order:
        raise ValueError("empty segment: no instruments to extract")
    return [make_instrument(c) for c in order]


def extract_content(segment: Score, keep_durations: bool = True) -> list[Token]:
    """C(·): pooled, merged, position-sorted notes without instrument tokens."""
    out: list[Token] = []
    for index, bar in enumerate(segment.bars):
        if index:
            out.append(BAR_TOKEN)
        best: dict[tuple[int, int], int] = {}
        for notes in bar.tracks.values():
            for note in notes:
                key = (note.position, note.pitch)
                if note.duration > best.get(key, 0):
                    best[key] = note.duration
        for pos, pitch in sorted(best, key=lambda k: (k[0], -k[1])):
            out.append(make_position(pos))
            out.append(make_pitch(pitch))
            if keep_durations:
                out.append(make_duration(best[(pos, pitch)]))
    return out


def project_pitch(tokens: list[Token]) -> list[Token]:
    return [t for t in tokens if t.kind == KIND_PITCH]


def project_position(tokens: list[Token]) -> list[Token]:
    return [t for t in tokens if t.kind == KIND_POSITION]


def project_duration(tokens: list[Token]) -> list[Token]:
    return [t for t in tokens if t.kind == KIND_DURATION]


def melody_class(segment: Score) -> int:
    """The non-drum class with the highest average pitch, ties by class id."""
    averages = {
        c: avg
        for c, avg in class_average_pitches(segment).items()
        if c != DRUM_CLASS_ID
    }
    if not averages:
        raise ValueError("no pitched track: melody undefined")
    return min(averages, key=lambda c: (-averages[c], c))


def extract_melody(segment: Score) -> list[tuple[int, int, int]]:
    """M(·): (bar, position, pitch) of the melody track's top note at each
    of its onset positions."""
    cls = melody_class(segment)
    out: list[tuple[int, int, int]] = []
    for bar_index, bar in enumerate(segment.bars):
        best: dict[int, int] = {}
        for note in bar.tracks.get(cls, ()):
            if note.pitch > best.get(note.position, -1):
                best[note.position] = note.pitch
        out.extend((bar_index, pos, best[pos]) for pos in sorted(best))
    return out
