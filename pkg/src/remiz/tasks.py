"""Training-sample builders for the four arrangement tasks.

Sample layout: <INSTRUMENT> I <CONTENT> C <HISTORY> H <SEP> target <EOS>,
with the loss starting at the first token after <SEP>. The history is the
previous segment's target-side tokens (teacher forcing), empty for the first
segment and always empty for voice separation.

Per-task augmentation of the content condition:
- band: k tracks deleted at random (k uniform over 0..n_tracks−1, the melody
  track never deleted), durations dropped;
- piano: none, but segments are kept only when the piano track's pitch range
  exceeds 0.4 × the segment's non-drum pitch range;
- drum: all drum notes removed from the content;
- voicesep: none, fully deterministic.
"""

from __future__ import annotations

import hashlib
import random
from collections import Counter
from dataclasses import dataclass
from enum import Enum

from .codec import encode_score
from .conditions import extract_content, extract_instruments, melody_class
from .instruments import DRUM_CLASS_ID, N_CLASSES, PIANO_CLASS_ID
from .score import Score, filter_classes
from .tokens import (
    CONTENT_TOKEN,
    EOS_TOKEN,
    HISTORY_TOKEN,
    INSTRUMENT_TOKEN,
    KIND_INSTRUMENT,
    SEP_TOKEN,
    Token,
    make_instrument,
    token_to_string,
)

MAX_SAMPLE_TOKENS = 2048


class TaskKind(Enum):
    BAND = "band"
    PIANO = "piano"
    DRUM = "drum"
    VOICESEP = "voicesep"

    @property
    def segment_bars(self) -> int:
        return 4 if self is TaskKind.DRUM else 1


@dataclass(frozen=True, slots=True)
class TrainingSample:
    task: TaskKind
    source_id: str
    segment_index: int
    instrument_cond: tuple[Token, ...]
    content_cond: tuple[Token, ...]
    history: tuple[Token, ...]
    target: tuple[Token, ...]
    tokens: tuple[Token, ...]
    loss_start_index: int

    def to_record(self) -> dict:
        return {
            "task": self.task.value,
            "source_id": self.source_id,
            "segment_index": self.segment_index,
            "tokens": [token_to_string(t) for t in self.tokens],
            "loss_start_index": self.loss_start_index,
        }


def assemble(
    instrument_cond: list[Token],
    content_cond: list[Token],
    history: list[Token],
    target: list[Token],
) -> tuple[tuple[Token, ...], int]:
    tokens = (
        INSTRUMENT_TOKEN,
        *instrument_cond,
        CONTENT_TOKEN,
        *content_cond,
        HISTORY_TOKEN,
        *history,
        SEP_TOKEN,
        *target,
        EOS_TOKEN,
    )
    loss_start = 4 + len(instrument_cond) + len(content_cond) + len(history)
    return tokens, loss_start


def segment_score(score: Score, task: TaskKind) -> list[tuple[int, Score]]:
    """Consecutive windows of the task's segment length, trailing partial
    kept, note-free windows skipped; indices count all windows."""
    size = task.segment_bars
    out: list[tuple[int, Score]] = []
    for index, start in enumerate(range(0, len(score.bars), size)):
        bars = score.bars[start : start + size]
        if any(bar.tracks for bar in bars):
            out.append((index, Score(bars, score.source_id)))
    return out


def _sample(
    task: TaskKind,
    segment: Score,
    segment_index: int,
    instrument_cond: list[Token],
    content_cond: list[Token],
    history: list[Token],
    target: list[Token],
) -> TrainingSample:
    tokens, loss_start = assemble(instrument_cond, content_cond, history, target)
    return TrainingSample(
        task,
        segment.source_id,
        segment_index,
        tuple(instrument_cond),
        tuple(content_cond),
        tuple(history),
        tuple(target),
        tokens,
        loss_start,
    )


def _band(
    segment: Score,
    segment_index: int,
    prev: Score | None,
    rng: random.Random,
) -> tuple[TrainingSample | None, str]:
    classes = set(segment.classes())
    if classes == {DRUM_CLASS_ID} or not classes:
        return None, "no-pitched-track"
    melody = melody_class(segment)
    k = rng.randint(0, len(classes) - 1)
    deletable = sorted(classes - {melody})
    deleted = set(rng.sample(deletable, k))
    content = extract_content(
        filter_classes(segment, classes - deleted), keep_durations=False
    )
    sample = _sample(
        TaskKind.BAND,
        segment,
        segment_index,
        extract_instruments(segment),
        content,
        encode_score(prev) if prev is not None else [],
        encode_score(segment),
    )
    return sample, "ok"


def _piano(
    segment: Score, segment_index: int, prev: Score | None
) -> tuple[TrainingSample | None, str]:
    if PIANO_CLASS_ID not in segment.classes():
        return None, "no-piano"
    piano_pitches = [
        n.pitch
        for bar in segment.bars
        for n in bar.tracks.get(PIANO_CLASS_ID, ())
    ]
    pitched = [
        n.pitch
        for bar in segment.bars
        for c, notes in bar.tracks.items()
        if c != DRUM_CLASS_ID
        for n in notes
    ]
    piano_range = max(piano_pitches) - min(piano_pitches)
    segment_range = max(pitched) - min(pitched)
    if not piano_range > 0.4 * segment_range:
        return None, "pitch-range"
    piano_only = {PIANO_CLASS_ID}
    sample = _sample(
        TaskKind.PIANO,
        segment,
        segment_index,
        [make_instrument(PIANO_CLASS_ID)],
        extract_content(segment, keep_durations=True),
        encode_score(filter_classes(prev, piano_only)) if prev is not None else [],
        encode_score(filter_classes(segment, piano_only)),
    )
    return sample, "ok"


def _drum(
    segment: Score, segment_index: int, prev: Score | None
) -> tuple[TrainingSample | None, str]:
    if len(segment.bars) != TaskKind.DRUM.segment_bars:
        return None, "partial-window"
    classes = set(segment.classes())
    if DRUM_CLASS_ID not in classes:
        return None, "no-drums"
    others = classes - {DRUM_CLASS_ID}
    if not others:
        return None, "no-pitched-content"
    drums_only = {DRUM_CLASS_ID}
    sample = _sample(
        TaskKind.DRUM,
        segment,
        segment_index,
        [make_instrument(DRUM_CLASS_ID)],
        extract_content(filter_classes(segment, others), keep_durations=True),
        encode_score(filter_classes(prev, drums_only)) if prev is not None else [],
        encode_score(filter_classes(segment, drums_only)),
    )
    return sample, "ok"


def _voicesep(
    segment: Score, segment_index: int, no_voice: bool
) -> tuple[TrainingSample | None, str]:
    classes = segment.classes()
    if len(classes) < 2:
        return None, "too-few-tracks"
    if no_voice:
        instrument_cond = [make_instrument(c) for c in sorted(classes)]
    else:
        instrument_cond = extract_instruments(segment)
    sample = _sample(
        TaskKind.VOICESEP,
        segment,
        segment_index,
        instrument_cond,
        extract_content(segment, keep_durations=True),
        [],
        encode_score(segment),
    )
    return sample, "ok"


def build_band_sample(
    segment: Score, prev: Score | None, rng: random.Random, segment_index: int = 0
) -> TrainingSample | None:
    return _band(segment, segment_index, prev, rng)[0]


def build_piano_sample(
    segment: Score, prev: Score | None, segment_index: int = 0
) -> TrainingSample | None:
    return _piano(segment, segment_index, prev)[0]


def build_drum_sample(
    segment: Score, prev: Score | None, segment_index: int = 0
) -> TrainingSample | None:
    return _drum(segment, segment_index, prev)[0]


def build_voicesep_sample(
    segment: Score, segment_index: int = 0, no_voice: bool = False
) -> TrainingSample | None:
    return _voicesep(segment, segment_index, no_voice)[0]


def derive_seed(seed: int, source_id: str) -> int:
    """Per-song seed, stable under corpus ordering and parallelism."""
    digest = hashlib.sha256(source_id.encode("utf-8")).digest()
    return (seed ^ int.from_bytes(digest[:8], "big")) & ((1 << 64) - 1)


def is_four_four(score: Score) -> bool:
    return all(bar.time_signature == (4, 4) for bar in score.bars)


def build_song_samples(
    score: Score,
    task: TaskKind,
    seed: int,
    *,
    no_voice: bool = False,
    max_len: int = MAX_SAMPLE_TOKENS,
) -> tuple[list[TrainingSample], Counter]:
    """All samples for one song, with reject/drop counters."""
    rng = random.Random(derive_seed(seed, score.source_id))
    segments = dict(segment_score(score, task))
    samples: list[TrainingSample] = []
    stats: Counter = Counter()
    for index in sorted(segments):
        segment = segments[index]
        prev = segments.get(index - 1)
        if task is TaskKind.BAND:
            sample, reason = _band(segment, index, prev, rng)
        elif task is TaskKind.PIANO:
            sample, reason = _piano(segment, index, prev)
        elif task is TaskKind.DRUM:
            sample, reason = _drum(segment, index, prev)
        else:
            sample, reason = _voicesep(segment, index, no_voice)
        if sample is None:
            stats[f"reject-{reason}"] += 1
            continue
        if len(sample.tokens) > max_len:
            stats["overlength"] += 1
            continue
        stats["samples"] += 1
        samples.append(sample)
    return samples, stats


def make_inference_prompt(
    task: TaskKind,
    user_instruments: list[Token],
    source_segment: Score,
    prev_output: list[Token] | None = None,
) -> list[Token]:
    """Condition prefix ending at <SEP>: content from the source piece,
    instruments (and their voice order) from the user, history from the
    previous segment's model output."""
    if not user_instruments:
        raise ValueError("at least one instrument token is required")
    for token in user_instruments:
        if token.kind != KIND_INSTRUMENT or not 0 <= token.value < N_CLASSES:
            raise ValueError(f"unknown instrument token: {token_to_string(token)}")
    source = source_segment
    if task is TaskKind.DRUM:
        keep = set(source.classes()) - {DRUM_CLASS_ID}
        source = filter_classes(source, keep)
    content = extract_content(source, keep_durations=task is not TaskKind.BAND)
    history = list(prev_output) if prev_output else []
    return [
        INSTRUMENT_TOKEN,
        *user_instruments,
        CONTENT_TOKEN,
        *content,
        HISTORY_TOKEN,
        *history,
        SEP_TOKEN,
    ]


def pretrain_tokens(score: Score) -> list[Token]:
    """One pre-training corpus entry: full song with s/t tokens, <EOS> last."""
    return encode_score(score, include_timesig_tempo=True) + [EOS_TOKEN]
