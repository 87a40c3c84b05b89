"""REMI-z tokenization toolkit: multi-track MIDI codec, arrangement dataset
builders, and objective metrics."""

from __future__ import annotations

__version__ = "0.1.0"

from .codec import (
    DecodeError,
    Violation,
    decode_tokens,
    encode_bar,
    encode_score,
    validate_stream,
)
from .conditions import (
    extract_content,
    extract_instruments,
    extract_melody,
    project_duration,
    project_pitch,
    project_position,
)
from .instruments import (
    DRUM_CLASS_ID,
    N_CLASSES,
    PIANO_CLASS_ID,
    class_name,
    class_of,
)
from .metrics import (
    AggregateReport,
    MetricReport,
    aggregate,
    evaluate_pair,
    iou,
    wer,
)
from .midi_io import (
    SmfParseError,
    UnrepresentableBarError,
    UnsupportedSmfError,
    group_instruments,
    parse_smf,
    quantize,
    score_from_midi_bytes,
    score_to_midi_bytes,
    write_smf,
)
from .score import Bar, Note, Score, bar_length_units, filter_classes
from .tasks import (
    TaskKind,
    TrainingSample,
    build_band_sample,
    build_drum_sample,
    build_piano_sample,
    build_song_samples,
    build_voicesep_sample,
    make_inference_prompt,
    pretrain_tokens,
    segment_score,
)
from .tokens import (
    Token,
    build_vocab,
    string_to_token,
    text_to_tokens,
    token_to_string,
    tokens_to_text,
)

__all__ = [
    "AggregateReport",
    "Bar",
    "DecodeError",
    "DRUM_CLASS_ID",
    "MetricReport",
    "N_CLASSES",
    "Note",
    "PIANO_CLASS_ID",
    "Score",
    "SmfParseError",
    "TaskKind",
    "Token",
    "TrainingSample",
    "UnrepresentableBarError",
    "UnsupportedSmfError",
    "Violation",
    "aggregate",
    "bar_length_units",
    "build_band_sample",
    "build_drum_sample",
    "build_piano_sample",
    "build_song_samples",
    "build_voicesep_sample",
    "build_vocab",
    "class_name",
    "class_of",
    "decode_tokens",
    "encode_bar",
    "encode_score",
    "evaluate_pair",
    "extract_content",
    "extract_instruments",
    "extract_melody",
    "filter_classes",
    "group_instruments",
    "iou",
    "make_inference_prompt",
    "parse_smf",
    "pretrain_tokens",
    "project_duration",
    "project_pitch",
    "project_position",
    "quantize",
    "score_from_midi_bytes",
    "score_to_midi_bytes",
    "segment_score",
    "string_to_token",
    "text_to_tokens",
    "token_to_string",
    "tokens_to_text",
    "validate_stream",
    "wer",
    "write_smf",
]
