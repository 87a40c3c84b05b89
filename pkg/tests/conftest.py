"""Shared test helpers: a seeded random score generator.

Scores are drawn from the full modelled space: 1-16 bars, up to 6 instrument
classes (drums included), up to 64 notes per bar, time signatures from the
assigned id range, tempos on the 49-bin grid. Durations may cross bar lines.
"""

from __future__ import annotations

import random

from remiz import Bar, Note, Score, bar_length_units
from remiz.tokens import id_to_tempo, id_to_timesig

TEMPO_CENTERS = tuple(id_to_tempo(i) for i in range(49))

# signatures whose bar fits the 128-unit position range
USABLE_SIGS = tuple(
    sig
    for sig in (id_to_timesig(i) for i in range(80))
    if sig[0] * 48 // sig[1] <= 128
)


def random_bar(
    rng: random.Random,
    classes: list[int],
    sig: tuple[int, int],
    tempo: float,
    max_notes: int = 64,
) -> Bar:
    length = bar_length_units(sig)
    tracks = {}
    for cls in classes:
        if rng.random() < 0.25:
            continue
        count = rng.randint(1, max(1, max_notes // len(classes)))
        notes = []
        for _ in range(count):
            position = rng.randrange(length)
            if cls == 34:
                pitch = 128 + rng.randrange(128)
            else:
                pitch = rng.randrange(128)
            notes.append(Note(position, pitch, rng.randint(1, 128)))
        tracks[cls] = tuple(notes)
    return Bar(sig, tempo, tracks)


def random_score(
    rng: random.Random,
    max_bars: int = 16,
    max_classes: int = 6,
    max_notes: int = 64,
    four_four: bool = False,
    source_id: str = "",
) -> Score:
    n_bars = rng.randint(1, max_bars)
    classes = rng.sample(range(35), rng.randint(1, max_classes))
    sig = (4, 4) if four_four else rng.choice(USABLE_SIGS)
    tempo = rng.choice(TEMPO_CENTERS)
    bars = []
    for _ in range(n_bars):
        if not four_four and rng.random() < 0.15:
            sig = rng.choice(USABLE_SIGS)
        if rng.random() < 0.15:
            tempo = rng.choice(TEMPO_CENTERS)
        bars.append(random_bar(rng, classes, sig, tempo, max_notes))
    return Score(tuple(bars), source_id)


def random_segment_with_notes(rng: random.Random, **kwargs) -> Score:
    """One-bar segment guaranteed to contain at least one pitched note."""
    while True:
        score = random_score(rng, max_bars=1, **kwargs)
        pitched = [
            n
            for bar in score.bars
            for c, notes in bar.tracks.items()
            if c != 34
            for n in notes
        ]
        if pitched:
            return score
