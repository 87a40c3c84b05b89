"""Codec: encoding layout, lenient decoding, canonicalization, and the
stream validator's rule set."""

import random

import pytest

from remiz.codec import (
    DecodeError,
    Violation,
    decode_tokens,
    encode_score,
    track_order,
    validate_stream,
)
from remiz.score import Bar, Note, Score
from remiz.tokens import (
    EOS_TOKEN,
    SEP_TOKEN,
    Token,
    parse_token_lenient,
    text_to_tokens,
    tokens_to_text,
)

from conftest import random_score


def _enc(score, **kwargs):
    return tokens_to_text(encode_score(score, **kwargs))


def _score(*bars):
    return Score(bars=tuple(bars))


def test_single_note_example():
    score = _score(Bar(tracks={0: (Note(0, 60, 12),)}))
    assert _enc(score) == "i-0 o-0 p-60 d-11 b-1"


def test_header_tokens_when_requested():
    score = _score(Bar(tracks={0: (Note(0, 60, 12),)}))
    assert (
        _enc(score, include_timesig_tempo=True)
        == "s-17 t-35 i-0 o-0 p-60 d-11 b-1"
    )


def test_empty_bar_is_just_a_bar_line():
    assert _enc(_score(Bar(tracks={}))) == "b-1"


def test_bar_line_count_matches_bar_count():
    score = _score(
        Bar(tracks={0: (Note(0, 60, 1),)}),
        Bar(tracks={}),
        Bar(tracks={5: (Note(3, 40, 2),)}),
    )
    tokens = encode_score(score)
    assert sum(1 for t in tokens if t.kind == "b") == 3


def test_notes_emit_full_triplets_position_asc_pitch_desc():
    score = _score(
        Bar(tracks={0: (Note(0, 60, 12), Note(0, 64, 12), Note(6, 55, 6))})
    )
    assert _enc(score) == "i-0 o-0 p-64 d-11 o-0 p-60 d-11 o-6 p-55 d-5 b-1"


def test_track_order_average_pitch_descending():
    bar = Bar(
        tracks={
            11: (Note(0, 36, 12),),
            0: (Note(0, 72, 12),),
            23: (Note(0, 60, 12),),
        }
    )
    assert list(track_order(bar)) == [0, 23, 11]
    assert _enc(_score(bar)).split().count("i-0") == 1
    assert _enc(_score(bar)).startswith("i-0 o-0 p-72")


def test_track_order_tie_breaks_by_class_id():
    bar = Bar(tracks={9: (Note(0, 60, 1),), 5: (Note(0, 60, 1),)})
    assert list(track_order(bar)) == [5, 9]


def test_track_order_puts_drums_first_via_token_space_pitch():
    bar = Bar(
        tracks={34: (Note(0, 164, 1),), 0: (Note(0, 100, 1),)}
    )
    assert list(track_order(bar)) == [34, 0]


def test_round_trip_identity_with_headers():
    rng = random.Random(0xC0DEC)
    for _ in range(40):
        score = random_score(rng)
        tokens = encode_score(score, include_timesig_tempo=True)
        assert decode_tokens(tokens) == score
        assert validate_stream(tokens) == []


def test_round_trip_without_headers_uses_defaults():
    rng = random.Random(0xC0DED)
    for _ in range(20):
        drawn = random_score(rng, four_four=True)
        score = Score(
            bars=tuple(Bar(tracks=bar.tracks) for bar in drawn.bars)
        )
        assert decode_tokens(encode_score(score)) == score


def test_decode_accepts_position_persistence():
    sparse = text_to_tokens("i-0 o-0 p-64 d-11 p-60 d-11 b-1")
    full = text_to_tokens("i-0 o-0 p-64 d-11 o-0 p-60 d-11 b-1")
    assert decode_tokens(sparse) == decode_tokens(full)


def test_decode_tolerates_one_terminal_eos():
    tokens = text_to_tokens("i-0 o-0 p-60 d-11 b-1") + [EOS_TOKEN]
    assert decode_tokens(tokens) == _score(Bar(tracks={0: (Note(0, 60, 12),)}))
    with pytest.raises(DecodeError):
        decode_tokens(tokens + [EOS_TOKEN])


def test_decode_merges_duplicate_instrument_tracks():
    dup = text_to_tokens("i-0 o-0 p-72 d-11 i-0 o-6 p-60 d-5 b-1")
    assert decode_tokens(dup) == _score(
        Bar(tracks={0: (Note(0, 72, 12), Note(6, 60, 6))})
    )


def test_decode_reorders_any_track_order():
    low_first = text_to_tokens("i-0 o-0 p-40 d-11 i-23 o-0 p-80 d-11 b-1")
    assert _enc(decode_tokens(low_first)) == (
        "i-23 o-0 p-80 d-11 i-0 o-0 p-40 d-11 b-1"
    )


def test_decode_carries_headers_across_bars():
    tokens = text_to_tokens("s-28 t-0 i-0 o-0 p-60 d-11 b-1 i-0 o-0 p-62 d-11 b-1")
    score = decode_tokens(tokens)
    assert score.bars[0].time_signature == (6, 8)
    assert score.bars[1].time_signature == (6, 8)
    assert score.bars[1].tempo_bpm == score.bars[0].tempo_bpm == pytest.approx(16.0)


def test_reencoding_decoded_stream_is_canonical():
    messy = text_to_tokens(
        "i-0 o-6 p-60 d-5 p-64 d-5 i-23 o-0 p-80 d-11 i-0 o-0 p-50 d-11 b-1"
    )
    assert validate_stream(messy) != []
    assert _enc(decode_tokens(messy)) == (
        "i-23 o-0 p-80 d-11 i-0 o-0 p-50 d-11 o-6 p-64 d-5 o-6 p-60 d-5 b-1"
    )


@pytest.mark.parametrize(
    "text,index,fragment",
    [
        ("i-0 o-0 p-60 d-11", 3, "unterminated"),
        ("o-0 p-60 d-11 b-1", 0, "before"),
        ("i-0 p-60 d-11 b-1", 1, "position"),
        ("i-0 o-0 d-11 b-1", 2, "pitch"),
        ("i-0 o-0 p-60 b-1", 3, "duration"),
        ("i-99 o-0 p-60 d-11 b-1", 0, "instrument"),
        ("i-0 o-0 p-130 d-11 b-1", 2, "pitch"),
        ("i-34 o-0 p-60 d-11 b-1", 2, "pitch"),
        ("i-0 o-0 p-60 d-11 s-17 b-1", 4, "signature"),
        ("i-0 o-47 p-60 d-11 b-1 s-28 i-0 o-36 p-60 d-11 b-1", 7, "position"),
    ],
)
def test_decode_errors_carry_token_index(text, index, fragment):
    with pytest.raises(DecodeError) as info:
        decode_tokens(text_to_tokens(text))
    assert info.value.index == index
    assert fragment in str(info.value)


def test_decode_rejects_specials_and_empty():
    with pytest.raises(DecodeError):
        decode_tokens([SEP_TOKEN, Token("b", 1)])
    with pytest.raises(DecodeError):
        decode_tokens([])
    with pytest.raises(DecodeError):
        decode_tokens(text_to_tokens("i-0 o-0 p-60 d-11"))


def _rules(text_or_tokens):
    tokens = (
        text_to_tokens(text_or_tokens)
        if isinstance(text_or_tokens, str)
        else text_or_tokens
    )
    return validate_stream(tokens)


def test_validator_passes_clean_streams():
    assert _rules("i-0 o-0 p-60 d-11 b-1") == []
    assert _rules("s-17 t-35 i-0 o-0 p-60 d-11 b-1") == []
    assert _rules("b-1 b-1") == []
    assert _rules(text_to_tokens("i-0 o-0 p-60 d-11 b-1") + [EOS_TOKEN]) == []


def test_validator_empty_stream():
    assert _rules([]) == [Violation(0, "empty-stream")]
    assert _rules([EOS_TOKEN]) == [Violation(0, "empty-stream")]


def test_validator_value_range():
    tokens = [parse_token_lenient("o-200"), Token("b", 1)]
    tokens = text_to_tokens("i-0") + tokens
    assert Violation(1, "value-range") in _rules(tokens)


def test_validator_unexpected_special():
    tokens = text_to_tokens("i-0 o-0 p-60 d-11 b-1")
    tokens.insert(1, SEP_TOKEN)
    assert Violation(1, "unexpected-special") in _rules(tokens)


def test_validator_misplaced_timesig():
    assert Violation(4, "misplaced-timesig") in _rules(
        "i-0 o-0 p-60 d-11 s-17 b-1"
    )
    assert Violation(1, "misplaced-timesig") in _rules("s-17 s-17 b-1")


def test_validator_reserved_timesig():
    assert Violation(0, "reserved-timesig") in _rules("s-80 b-1")
    assert Violation(0, "reserved-timesig") in _rules("s-253 b-1")


def test_validator_bar_too_long():
    assert Violation(0, "bar-too-long") in _rules("s-76 b-1")  # 16/2


def test_validator_misplaced_tempo():
    assert Violation(4, "misplaced-tempo") in _rules(
        "i-0 o-0 p-60 d-11 t-35 b-1"
    )
    assert Violation(1, "misplaced-tempo") in _rules("t-0 t-0 b-1")


def test_validator_missing_duration():
    assert Violation(3, "missing-duration") in _rules("i-0 o-0 p-60 b-1")
    assert Violation(3, "missing-duration") in _rules("i-0 o-0 p-60 o-6 p-55 d-1 b-1")
    assert Violation(3, "missing-duration") in _rules("i-0 o-0 p-60 i-1 o-0 p-50 d-1 b-1")


def test_validator_note_before_instrument():
    assert Violation(0, "note-before-instrument") in _rules("o-0 p-60 d-11 b-1")


def test_validator_unknown_instrument():
    assert Violation(0, "unknown-instrument") in _rules("i-35 o-0 p-60 d-11 b-1")
    assert Violation(0, "unknown-instrument") in _rules("i-128 o-0 p-60 d-11 b-1")


def test_validator_duplicate_instrument():
    assert Violation(4, "duplicate-instrument") in _rules(
        "i-0 o-0 p-72 d-1 i-0 o-0 p-60 d-1 b-1"
    )


def test_validator_position_range():
    assert Violation(1, "position-range") in _rules("i-0 o-48 p-60 d-11 b-1")
    assert _rules("i-0 o-47 p-60 d-11 b-1") == []
    assert Violation(2, "position-range") in _rules("s-2 i-0 o-12 p-60 d-1 b-1")


def test_validator_note_order_positions():
    assert Violation(4, "note-order") in _rules(
        "i-0 o-6 p-60 d-1 o-0 p-60 d-1 b-1"
    )


def test_validator_note_order_pitches_within_position():
    assert Violation(4, "note-order") in _rules(
        "i-0 o-0 p-60 d-1 p-64 d-1 b-1"
    )


def test_validator_pitch_before_position():
    assert Violation(1, "pitch-before-position") in _rules("i-0 p-60 d-11 b-1")


def test_validator_pitch_domain():
    assert Violation(2, "pitch-domain") in _rules("i-0 o-0 p-130 d-1 b-1")
    assert Violation(2, "pitch-domain") in _rules("i-34 o-0 p-60 d-1 b-1")
    assert _rules("i-34 o-0 p-130 d-1 b-1") == []


def test_validator_duplicate_note():
    assert Violation(4, "duplicate-note") in _rules(
        "i-0 o-0 p-60 d-1 p-60 d-1 b-1"
    )


def test_validator_duration_without_pitch():
    assert Violation(2, "duration-without-pitch") in _rules("i-0 o-0 d-11 b-1")


def test_validator_empty_track():
    assert Violation(0, "empty-track") in _rules("i-0 b-1")
    assert Violation(4, "empty-track") in _rules("i-0 o-0 p-60 d-1 i-1 b-1")


def test_validator_track_order():
    assert Violation(4, "track-order") in _rules(
        "i-0 o-0 p-40 d-1 i-23 o-0 p-80 d-1 b-1"
    )
    # equal averages: class ids must ascend
    assert Violation(4, "track-order") in _rules(
        "i-9 o-0 p-60 d-1 i-5 o-0 p-60 d-1 b-1"
    )
    assert _rules("i-5 o-0 p-60 d-1 i-9 o-0 p-60 d-1 b-1") == []


def test_validator_unterminated_bar():
    assert Violation(3, "unterminated-bar") in _rules("i-0 o-0 p-60 d-11")
    # a header with no completed bar counts as an empty stream
    assert _rules("s-17") == [Violation(0, "empty-stream")]


def test_validator_flags_every_bar_independently():
    rules = _rules("i-0 b-1 i-1 b-1")
    assert rules == [Violation(0, "empty-track"), Violation(2, "empty-track")]
