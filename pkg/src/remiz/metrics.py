"""Objective metrics for comparing generated and reference token sequences.

Eight metrics per output-reference pair:
- I-IoU: IoU of the instrument sets.
- V-WER: word error rate between the voice-ordered instrument sequences.
- P-IoU / O-IoU (segment level): IoU of the pitch / position token sets of
  the content, so both are invariant to how notes are assigned to tracks.
- M-R: fraction of reference melody (bar, position, pitch) notes present
  anywhere in the output, instrument-agnostic.
- P-IoU / O-IoU (track level): mean per-instrument IoU over the instruments
  shared by both sequences.
- D-D: mean absolute difference of per-instrument average note duration over
  shared instruments, in beats.

Undefined values (empty denominators, no shared instruments) are reported as
None and counted, never silently zeroed. Inputs are read tolerantly: any
token stream a model could emit is accepted, and sequences containing a
<SEP> are evaluated on the portion after the last one.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from typing import Iterable, NamedTuple, Sequence

from .instruments import DRUM_CLASS_ID
from .tokens import (
    KIND_BAR,
    KIND_DURATION,
    KIND_INSTRUMENT,
    KIND_PITCH,
    KIND_POSITION,
    KIND_SPECIAL,
    SEP,
    Token,
)

UNITS_PER_BEAT = 12


def wer(out_seq: Sequence, ref_seq: Sequence) -> float:
    """Edit distance (substitutions + deletions + insertions, unit costs)
    divided by the reference length; may exceed 1."""
    if not ref_seq:
        raise ValueError("empty reference: word error rate undefined")
    prev = list(range(len(ref_seq) + 1))
    for i, out_item in enumerate(out_seq, start=1):
        cur = [i] + [0] * len(ref_seq)
        for j, ref_item in enumerate(ref_seq, start=1):
            cost = 0 if out_item == ref_item else 1
            cur[j] = min(prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + cost)
        prev = cur
    return prev[-1] / len(ref_seq)


def iou(set1: set, set2: set) -> float:
    union = set1 | set2
    if not union:
        raise ValueError("both sets empty: IoU undefined")
    return len(set1 & set2) / len(union)


class _NoteRec(NamedTuple):
    bar: int
    class_id: int | None
    position: int | None
    pitch: int
    duration: int | None  # grid units


class _ParsedSeq(NamedTuple):
    notes: tuple[_NoteRec, ...]
    instrument_seq: tuple[int, ...]


def _target_portion(tokens: Iterable[Token]) -> list[Token]:
    out = list(tokens)
    for index in range(len(out) - 1, -1, -1):
        if out[index] == Token(KIND_SPECIAL, SEP):
            return out[index + 1 :]
    return out


def parse_sequence(tokens: Iterable[Token]) -> _ParsedSeq:
    """Lenient reading of any token stream into note records plus the
    literal instrument-token sequence."""
    notes: list[_NoteRec] = []
    instruments: list[int] = []
    bar = 0
    cls: int | None = None
    pos: int | None = None
    pending: int | None = None  # index into notes awaiting a duration
    for token in _target_portion(tokens):
        kind = token.kind
        if kind == KIND_INSTRUMENT:
            instruments.append(token.value)
            cls = token.value
            pos = None
            pending = None
        elif kind == KIND_POSITION:
            pos = token.value
            pending = None
        elif kind == KIND_PITCH:
            notes.append(_NoteRec(bar, cls, pos, token.value, None))
            pending = len(notes) - 1
        elif kind == KIND_DURATION:
            if pending is not None and notes[pending].duration is None:
                notes[pending] = notes[pending]._replace(
                    duration=token.value + 1
                )
            pending = None
        elif kind == KIND_BAR:
            bar += 1
            cls = None
            pos = None
            pending = None
        # s/t and specials carry no note content
    return _ParsedSeq(tuple(notes), tuple(instruments))


def _pitch_set(parsed: _ParsedSeq) -> set[int]:
    return {n.pitch for n in parsed.notes}


def _position_set(parsed: _ParsedSeq) -> set[int]:
    return {n.position for n in parsed.notes if n.position is not None}


def _track_notes(parsed: _ParsedSeq, class_id: int) -> list[_NoteRec]:
    return [n for n in parsed.notes if n.class_id == class_id]


def _melody(parsed: _ParsedSeq) -> set[tuple[int, int, int]]:
    """Reference melody: per-(bar, position) top pitch of the non-drum class
    with the highest average pitch."""
    averages: dict[int, tuple[int, int]] = {}
    for note in parsed.notes:
        if note.class_id is None or note.class_id == DRUM_CLASS_ID:
            continue
        if note.pitch >= 128 or note.position is None:
            continue
        total, count = averages.get(note.class_id, (0, 0))
        averages[note.class_id] = (total + note.pitch, count + 1)
    if not averages:
        return set()
    cls = min(averages, key=lambda c: (-averages[c][0] / averages[c][1], c))
    best: dict[tuple[int, int], int] = {}
    for note in parsed.notes:
        if note.class_id != cls or note.position is None:
            continue
        key = (note.bar, note.position)
        if note.pitch > best.get(key, -1):
            best[key] = note.pitch
    return {(bar, pos, pitch) for (bar, pos), pitch in best.items()}


def _maybe_iou(set1: set, set2: set) -> float | None:
    try:
        return iou(set1, set2)
    except ValueError:
        return None


def instrument_iou(out: _ParsedSeq, ref: _ParsedSeq) -> float | None:
    return _maybe_iou(set(out.instrument_seq), set(ref.instrument_seq))


def voice_wer(out: _ParsedSeq, ref: _ParsedSeq) -> float | None:
    if not ref.instrument_seq:
        return None
    return wer(out.instrument_seq, ref.instrument_seq)


def melody_recall(out: _ParsedSeq, ref: _ParsedSeq) -> float | None:
    melody = _melody(ref)
    if not melody:
        return None
    present = {
        (n.bar, n.position, n.pitch)
        for n in out.notes
        if n.position is not None
    }
    return len(melody & present) / len(melody)


def _shared_instruments(out: _ParsedSeq, ref: _ParsedSeq) -> list[int]:
    return sorted(set(out.instrument_seq) & set(ref.instrument_seq))


def _track_mean_iou(
    out: _ParsedSeq, ref: _ParsedSeq, value_set
) -> float | None:
    values = []
    for class_id in _shared_instruments(out, ref):
        out_notes = _track_notes(out, class_id)
        ref_notes = _track_notes(ref, class_id)
        term = _maybe_iou(value_set(out_notes), value_set(ref_notes))
        if term is not None:
            values.append(term)
    return sum(values) / len(values) if values else None


def track_pitch_iou(out: _ParsedSeq, ref: _ParsedSeq) -> float | None:
    return _track_mean_iou(out, ref, lambda notes: {n.pitch for n in notes})


def track_position_iou(out: _ParsedSeq, ref: _ParsedSeq) -> float | None:
    return _track_mean_iou(
        out,
        ref,
        lambda notes: {n.position for n in notes if n.position is not None},
    )


def duration_diff(out: _ParsedSeq, ref: _ParsedSeq) -> float | None:
    """Mean |average note duration difference| in beats over shared
    instruments; track pairs where either side has no durations are skipped."""
    diffs = []
    for class_id in _shared_instruments(out, ref):
        out_durs = [
            n.duration for n in _track_notes(out, class_id) if n.duration
        ]
        ref_durs = [
            n.duration for n in _track_notes(ref, class_id) if n.duration
        ]
        if not out_durs or not ref_durs:
            continue
        out_avg = sum(out_durs) / len(out_durs)
        ref_avg = sum(ref_durs) / len(ref_durs)
        diffs.append(abs(out_avg - ref_avg) / UNITS_PER_BEAT)
    return sum(diffs) / len(diffs) if diffs else None


@dataclass(frozen=True, slots=True)
class MetricReport:
    i_iou: float | None
    v_wer: float | None
    p_iou_segment: float | None
    o_iou_segment: float | None
    melody_recall: float | None
    p_iou_track: float | None
    o_iou_track: float | None
    d_d: float | None

    def as_dict(self) -> dict[str, float | None]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


METRIC_NAMES = tuple(f.name for f in fields(MetricReport))


def evaluate_pair(
    out_tokens: Iterable[Token], ref_tokens: Iterable[Token]
) -> MetricReport:
    out = parse_sequence(out_tokens)
    ref = parse_sequence(ref_tokens)
    return MetricReport(
        i_iou=instrument_iou(out, ref),
        v_wer=voice_wer(out, ref),
        p_iou_segment=_maybe_iou(_pitch_set(out), _pitch_set(ref)),
        o_iou_segment=_maybe_iou(_position_set(out), _position_set(ref)),
        melody_recall=melody_recall(out, ref),
        p_iou_track=track_pitch_iou(out, ref),
        o_iou_track=track_position_iou(out, ref),
        d_d=duration_diff(out, ref),
    )


@dataclass(frozen=True, slots=True)
class AggregateReport:
    n_pairs: int
    report: MetricReport
    undefined_counts: dict[str, int]


def aggregate(reports: list[MetricReport]) -> AggregateReport:
    """Mean per metric over pairs where it is defined, with per-metric
    undefined counts."""
    means: dict[str, float | None] = {}
    undefined: dict[str, int] = {}
    for name in METRIC_NAMES:
        values = [
            v for r in reports if (v := getattr(r, name)) is not None
        ]
        undefined[name] = len(reports) - len(values)
        means[name] = sum(values) / len(values) if values else None
    return AggregateReport(len(reports), MetricReport(**means), undefined)
