"""Instrument class table.

The toolkit never works with raw General MIDI program numbers past the input
boundary. Programs are folded into 35 classes (34 pitched + drums) as soon as
a file is parsed, and the class id is what the i-token carries. The table
lives in data/instrument_classes.tsv so other tools can consume the same
mapping without importing this package.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources

N_CLASSES = 35
DRUM_CLASS_ID = 34
PIANO_CLASS_ID = 0


@dataclass(frozen=True, slots=True)
class InstrumentClass:
    class_id: int
    name: str
    programs: tuple[int, ...]


def _load_table() -> tuple[InstrumentClass, ...]:
    text = (
        resources.files("remiz.data")
        .joinpath("instrument_classes.tsv")
        .read_text(encoding="utf-8")
    )
    rows: list[InstrumentClass] = []
    header_seen = False
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        if not header_seen:
            if line.split("\t")[:2] != ["class_id", "name"]:
                raise ValueError("instrument table header mismatch")
            header_seen = True
            continue
        parts = line.split("\t")
        class_id = int(parts[0])
        name = parts[1]
        raw = parts[2] if len(parts) > 2 else ""
        programs = tuple(int(p) for p in raw.split(",")) if raw else ()
        rows.append(InstrumentClass(class_id, name, programs))
    table = tuple(rows)
    _validate(table)
    return table


def _validate(table: tuple[InstrumentClass, ...]) -> None:
    if [c.class_id for c in table] != list(range(N_CLASSES)):
        raise ValueError("instrument table must list class ids 0..34 in order")
    seen: dict[int, int] = {}
    for cls in table:
        for program in cls.programs:
            if program in seen:
                raise ValueError(f"program {program} mapped twice")
            seen[program] = cls.class_id
    if sorted(seen) != list(range(128)):
        raise ValueError("pitched classes must partition programs 0..127")
    if table[DRUM_CLASS_ID].programs:
        raise ValueError("drum class is keyed by channel, not program")


CLASSES: tuple[InstrumentClass, ...] = _load_table()

_PROGRAM_TO_CLASS: dict[int, int] = {
    program: cls.class_id for cls in CLASSES for program in cls.programs
}


def class_of(program: int, is_drum: bool = False) -> int:
    """Map a GM program (and drum-channel flag) to a class id."""
    if is_drum:
        return DRUM_CLASS_ID
    if not 0 <= program <= 127:
        raise ValueError(f"program out of range: {program}")
    return _PROGRAM_TO_CLASS[program]


def class_name(class_id: int) -> str:
    return CLASSES[_check_class(class_id)].name


def canonical_program(class_id: int) -> int:
    """Representative program for synthesis; drums have no program, use 0."""
    cls = CLASSES[_check_class(class_id)]
    return min(cls.programs) if cls.programs else 0


def _check_class(class_id: int) -> int:
    if not 0 <= class_id < N_CLASSES:
        raise ValueError(f"instrument class out of range: {class_id}")
    return class_id
