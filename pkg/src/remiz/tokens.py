"""Token language: kinds, string grammar, vocabulary, and the s/t value maps.

Design notes
------------
- A Token is a bare (kind, value) pair with no validation so that malformed
  streams (e.g. an out-of-range o-200 read from a file) can be represented
  and reported by the validator instead of blowing up at parse time. Use the
  make_* factories when constructing tokens that must be in range.
- d-X encodes duration−1: the 0..127 token range covers 1..128 grid units.
- Time signature ids enumerate numerator 1..16 × denominator {1,2,4,8,16}
  as (num−1)*5 + den_index; ids 80..253 are reserved.
- Tempo ids are 49 log-spaced bins over 16..256 BPM: bin i is 16·2^(i/12).
  Snapping to a bin center is idempotent.
"""

from __future__ import annotations

import math
from typing import NamedTuple

KIND_INSTRUMENT = "i"
KIND_POSITION = "o"
KIND_PITCH = "p"
KIND_DURATION = "d"
KIND_BAR = "b"
KIND_TIMESIG = "s"
KIND_TEMPO = "t"
KIND_SPECIAL = "special"

SPECIAL_STRINGS = ("<SEP>", "<INSTRUMENT>", "<CONTENT>", "<HISTORY>", "<EOS>")
SEP, INSTRUMENT, CONTENT, HISTORY, EOS = range(5)

# kind -> number of values (valid values are 0..count-1; b is the exception,
# its only value is 1)
KIND_COUNTS = {
    KIND_INSTRUMENT: 129,
    KIND_POSITION: 128,
    KIND_PITCH: 256,
    KIND_DURATION: 128,
    KIND_TIMESIG: 254,
    KIND_TEMPO: 49,
}

VOCAB_SIZE = 950


class Token(NamedTuple):
    kind: str
    value: int


BAR_TOKEN = Token(KIND_BAR, 1)
SEP_TOKEN = Token(KIND_SPECIAL, SEP)
INSTRUMENT_TOKEN = Token(KIND_SPECIAL, INSTRUMENT)
CONTENT_TOKEN = Token(KIND_SPECIAL, CONTENT)
HISTORY_TOKEN = Token(KIND_SPECIAL, HISTORY)
EOS_TOKEN = Token(KIND_SPECIAL, EOS)


def in_range(token: Token) -> bool:
    if token.kind == KIND_SPECIAL:
        return 0 <= token.value < len(SPECIAL_STRINGS)
    if token.kind == KIND_BAR:
        return token.value == 1
    count = KIND_COUNTS.get(token.kind)
    return count is not None and 0 <= token.value < count


def _make(kind: str, value: int) -> Token:
    token = Token(kind, value)
    if not in_range(token):
        raise ValueError(f"token value out of range: {kind}-{value}")
    return token


def make_instrument(class_id: int) -> Token:
    return _make(KIND_INSTRUMENT, class_id)


def make_position(units: int) -> Token:
    return _make(KIND_POSITION, units)


def make_pitch(pitch: int) -> Token:
    return _make(KIND_PITCH, pitch)


def make_duration(units: int) -> Token:
    # token value = duration − 1
    if not 1 <= units <= 128:
        raise ValueError(f"duration out of range: {units}")
    return Token(KIND_DURATION, units - 1)


def duration_units(token: Token) -> int:
    return token.value + 1


def token_to_string(token: Token) -> str:
    if token.kind == KIND_SPECIAL:
        return SPECIAL_STRINGS[token.value]
    return f"{token.kind}-{token.value}"


def string_to_token(text: str) -> Token:
    """Strict inverse of token_to_string; rejects out-of-range values."""
    token = parse_token_lenient(text)
    if not in_range(token):
        raise ValueError(f"token out of range: {text!r}")
    return token


def parse_token_lenient(text: str) -> Token:
    """Parse shape only (kind and integer), leaving range checks to the
    validator so bad values can be reported with context."""
    if text in SPECIAL_STRINGS:
        return Token(KIND_SPECIAL, SPECIAL_STRINGS.index(text))
    kind, sep, raw = text.partition("-")
    if (
        sep
        and kind in (KIND_BAR, *KIND_COUNTS)
        and raw.isdigit()
    ):
        return Token(kind, int(raw))
    raise ValueError(f"unknown token: {text!r}")


def tokens_to_text(tokens: list[Token] | tuple[Token, ...]) -> str:
    return " ".join(token_to_string(t) for t in tokens)


def text_to_tokens(text: str) -> list[Token]:
    return [string_to_token(word) for word in text.split()]


# --- time signature map ------------------------------------------------------

TIMESIG_DENOMINATORS = (1, 2, 4, 8, 16)
N_TIMESIG_IDS = 16 * len(TIMESIG_DENOMINATORS)  # 80 assigned, 80..253 reserved


def timesig_to_id(time_signature: tuple[int, int]) -> int:
    num, den = time_signature
    if not 1 <= num <= 16 or den not in TIMESIG_DENOMINATORS:
        raise ValueError(f"unsupported time signature: {num}/{den}")
    return (num - 1) * len(TIMESIG_DENOMINATORS) + TIMESIG_DENOMINATORS.index(den)


def id_to_timesig(value: int) -> tuple[int, int]:
    if not 0 <= value < N_TIMESIG_IDS:
        raise ValueError(f"reserved time signature id: {value}")
    num, den_index = divmod(value, len(TIMESIG_DENOMINATORS))
    return (num + 1, TIMESIG_DENOMINATORS[den_index])


# --- tempo map ----------------------------------------------------------------

N_TEMPO_IDS = 49


def id_to_tempo(value: int) -> float:
    if not 0 <= value < N_TEMPO_IDS:
        raise ValueError(f"tempo id out of range: {value}")
    return 16.0 * 2.0 ** (value / 12.0)


def tempo_to_id(bpm: float) -> int:
    if bpm <= 0:
        raise ValueError(f"tempo out of range: {bpm}")
    return max(0, min(N_TEMPO_IDS - 1, round(12.0 * math.log2(bpm / 16.0))))


def snap_tempo(bpm: float) -> float:
    return id_to_tempo(tempo_to_id(bpm))


DEFAULT_TIME_SIGNATURE = (4, 4)
DEFAULT_TEMPO_BPM = id_to_tempo(35)


# --- vocabulary ---------------------------------------------------------------

def build_vocab() -> tuple[tuple[str, int], ...]:
    """Dense id assignment: specials, b-1, then i/o/p/d/s/t blocks."""
    entries: list[tuple[str, int]] = []
    for text in SPECIAL_STRINGS:
        entries.append((text, len(entries)))
    entries.append((token_to_string(BAR_TOKEN), len(entries)))
    for kind in (
        KIND_INSTRUMENT,
        KIND_POSITION,
        KIND_PITCH,
        KIND_DURATION,
        KIND_TIMESIG,
        KIND_TEMPO,
    ):
        for value in range(KIND_COUNTS[kind]):
            entries.append((f"{kind}-{value}", len(entries)))
    assert len(entries) == VOCAB_SIZE
    return tuple(entries)


def vocab_maps() -> dict[str, dict[str, object]]:
    """The s/t value↔meaning maps persisted beside the vocab file."""
    return {
        "time_signatures": {
            f"s-{i}": list(id_to_timesig(i)) for i in range(N_TIMESIG_IDS)
        },
        "tempos_bpm": {f"t-{i}": id_to_tempo(i) for i in range(N_TEMPO_IDS)},
    }
