"""Command line interface.

Commands: tokenize, detokenize, build, corpus, eval, validate, vocab.
Every command is reproducible byte-for-byte given the same inputs, flags,
and seed, regardless of --jobs: files are processed in deterministic order,
workers are pure, and results are assembled in input order. Output metadata
records the tool version, seed, and flags, never a timestamp.

Exit codes: 0 success, 1 partial or data failure, 2 usage error. Flag
defaults can be overridden with REMIZ_-prefixed environment variables
(REMIZ_SEED, REMIZ_JOBS, REMIZ_MAX_LEN, ...).
"""

from __future__ import annotations

import argparse
import glob
import json
import os
import sys
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .codec import decode_tokens, encode_score, validate_stream
from .metrics import METRIC_NAMES, MetricReport, aggregate, evaluate_pair
from .midi_io import score_from_midi_bytes, write_smf
from .score import Score
from .tasks import (
    MAX_SAMPLE_TOKENS,
    TaskKind,
    build_song_samples,
    is_four_four,
    pretrain_tokens,
)
from .tokens import (
    Token,
    build_vocab,
    parse_token_lenient,
    string_to_token,
    tokens_to_text,
    vocab_maps,
)

_MIDI_SUFFIXES = (".mid", ".midi")


def _env(name: str, fallback):
    return os.environ.get(f"REMIZ_{name}", fallback)


def _env_flag(name: str) -> bool:
    return _env(name, "").lower() in ("1", "true", "yes", "on")


def _collect_inputs(raw: list[str]) -> list[Path]:
    paths: list[Path] = []
    for arg in raw:
        path = Path(arg)
        if path.is_dir():
            paths.extend(
                sorted(
                    p
                    for p in path.rglob("*")
                    if p.suffix.lower() in _MIDI_SUFFIXES
                )
            )
        elif any(ch in arg for ch in "*?["):
            paths.extend(Path(p) for p in sorted(glob.glob(arg, recursive=True)))
        else:
            paths.append(path)
    return paths


def _open_out(path: str):
    if path == "-":
        return sys.stdout
    return open(path, "w", encoding="utf-8")


def _meta_comment(command: str, **fields) -> str:
    meta = {"tool": "remiz", "version": __version__, "command": command}
    meta.update(fields)
    return "# " + json.dumps(meta, sort_keys=True)


def _parse_line_strict(text: str) -> list[Token]:
    tokens = []
    for index, word in enumerate(text.split()):
        try:
            tokens.append(string_to_token(word))
        except ValueError as exc:
            raise ValueError(f"token {index}: {exc}") from None
    return tokens


def _parse_line_lenient(text: str) -> list[Token]:
    return [parse_token_lenient(word) for word in text.split()]


def _read_token_lines(path: Path) -> tuple[list[str], list[str]]:
    """Token file lines plus any source names recorded in the header.
    Accepts plain-token files (with '# ' metadata header) and JSONL sample
    files ({'_meta': ...} first line, 'tokens' field per record)."""
    lines: list[str] = []
    sources: list[str] = []
    with open(path, encoding="utf-8") as handle:
        for raw in handle:
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("# "):
                try:
                    sources = json.loads(line[2:]).get("sources", sources)
                except (json.JSONDecodeError, AttributeError):
                    pass
                continue
            if line.startswith("{"):
                record = json.loads(line)
                if "_meta" in record:
                    continue
                lines.append(" ".join(record["tokens"]))
                sources.append(record.get("source_id", ""))
                continue
            lines.append(line)
    return lines, sources


def _run_jobs(worker, items: list, jobs: int) -> list:
    if jobs <= 1 or len(items) <= 1:
        return [worker(item) for item in items]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, items))


# --- tokenize ----------------------------------------------------------------

def _tokenize_worker(item: tuple[str, bool]):
    path, include_st = item
    try:
        score = score_from_midi_bytes(Path(path).read_bytes(), Path(path).stem)
        return tokens_to_text(encode_score(score, include_st)), None
    except (OSError, ValueError) as exc:
        return None, f"{path}: {exc}"


def cmd_tokenize(args) -> int:
    paths = _collect_inputs(args.inputs)
    results = _run_jobs(
        _tokenize_worker, [(str(p), args.include_st) for p in paths], args.jobs
    )
    lines = []
    sources = []
    failures = []
    for path, (line, error) in zip(paths, results):
        if error is not None:
            failures.append(error)
        else:
            lines.append(line)
            sources.append(path.stem)
    out = _open_out(args.out)
    try:
        print(
            _meta_comment("tokenize", include_st=args.include_st, sources=sources),
            file=out,
        )
        for line in lines:
            print(line, file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    for failure in failures:
        print(f"error: {failure}", file=sys.stderr)
    return 1 if failures else 0


# --- detokenize --------------------------------------------------------------

def cmd_detokenize(args) -> int:
    lines, sources = _read_token_lines(Path(args.input))
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for index, line in enumerate(lines):
        name = (
            sources[index]
            if index < len(sources) and sources[index]
            else f"{index:05d}"
        )
        try:
            score = decode_tokens(_parse_line_strict(line))
            (out_dir / f"{name}.mid").write_bytes(write_smf(score))
        except ValueError as exc:
            print(f"error: line {index + 1}: {exc}", file=sys.stderr)
            failures += 1
    return 1 if failures else 0


# --- build -------------------------------------------------------------------

def _songs_from_file(path: Path) -> list[Score]:
    if path.suffix.lower() in _MIDI_SUFFIXES:
        return [score_from_midi_bytes(path.read_bytes(), path.stem)]
    lines, sources = _read_token_lines(path)
    songs = []
    for index, line in enumerate(lines):
        source_id = (
            sources[index]
            if index < len(sources) and sources[index]
            else f"{path.stem}-{index:05d}"
        )
        songs.append(decode_tokens(_parse_line_strict(line), source_id))
    return songs


def _build_worker(item: tuple[str, str, int, bool, int, bool]):
    path, task_value, seed, four_four_only, max_len, no_voice = item
    task = TaskKind(task_value)
    records: list[str] = []
    stats: Counter = Counter()
    try:
        songs = _songs_from_file(Path(path))
    except (OSError, ValueError) as exc:
        return [], {}, f"{path}: {exc}"
    for song in songs:
        if four_four_only and not is_four_four(song):
            stats["skipped-not-4-4"] += 1
            continue
        samples, song_stats = build_song_samples(
            song, task, seed, no_voice=no_voice, max_len=max_len
        )
        stats.update(song_stats)
        records.extend(
            json.dumps(s.to_record(), sort_keys=True) for s in samples
        )
    return records, dict(stats), None


def cmd_build(args) -> int:
    paths = _collect_inputs(args.inputs)
    items = [
        (
            str(p),
            args.task,
            args.seed,
            args.four_four_only,
            args.max_len,
            args.no_voice,
        )
        for p in paths
    ]
    results = _run_jobs(_build_worker, items, args.jobs)
    stats: Counter = Counter()
    failures = []
    out = _open_out(args.out)
    try:
        meta = {
            "_meta": {
                "tool": "remiz",
                "version": __version__,
                "command": "build",
                "task": args.task,
                "seed": args.seed,
                "four_four_only": args.four_four_only,
                "max_len": args.max_len,
                "no_voice": args.no_voice,
            }
        }
        print(json.dumps(meta, sort_keys=True), file=out)
        for records, file_stats, error in results:
            if error is not None:
                failures.append(error)
                continue
            stats.update(file_stats)
            for record in records:
                print(record, file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    checked = stats["samples"] + stats["reject-pitch-range"]
    if args.task == TaskKind.PIANO.value and checked:
        stats["piano-acceptance-rate"] = round(stats["samples"] / checked, 4)
    print(json.dumps({"stats": dict(stats)}, sort_keys=True), file=sys.stderr)
    for failure in failures:
        print(f"error: {failure}", file=sys.stderr)
    return 1 if failures else 0


# --- corpus ------------------------------------------------------------------

def _corpus_worker(item: tuple[str, bool]):
    path, four_four_only = item
    try:
        score = score_from_midi_bytes(Path(path).read_bytes(), Path(path).stem)
    except (OSError, ValueError) as exc:
        return None, f"{path}: {exc}"
    if four_four_only and not is_four_four(score):
        return "", None  # skipped
    return tokens_to_text(pretrain_tokens(score)), None


def cmd_corpus(args) -> int:
    paths = _collect_inputs(args.inputs)
    results = _run_jobs(
        _corpus_worker, [(str(p), args.four_four_only) for p in paths], args.jobs
    )
    lines = []
    sources = []
    failures = []
    for path, (line, error) in zip(paths, results):
        if error is not None:
            failures.append(error)
        elif line:
            lines.append(line)
            sources.append(path.stem)
    out = _open_out(args.out)
    try:
        print(
            _meta_comment(
                "corpus", four_four_only=args.four_four_only, sources=sources
            ),
            file=out,
        )
        for line in lines:
            print(line, file=out)
    finally:
        if out is not sys.stdout:
            out.close()
    for failure in failures:
        print(f"error: {failure}", file=sys.stderr)
    return 1 if failures else 0


# --- eval --------------------------------------------------------------------

_METRIC_LABELS = {
    "i_iou": ("I-IoU", "%"),
    "v_wer": ("V-WER", "%"),
    "p_iou_segment": ("P-IoU (segment)", "%"),
    "o_iou_segment": ("O-IoU (segment)", "%"),
    "melody_recall": ("M-R", "%"),
    "p_iou_track": ("P-IoU (track)", "%"),
    "o_iou_track": ("O-IoU (track)", "%"),
    "d_d": ("D-D (beats)", "beats"),
}


def _format_metric(name: str, value: float | None) -> str:
    if value is None:
        return "-"
    if _METRIC_LABELS[name][1] == "%":
        return f"{value * 100:.2f}"
    return f"{value:.4f}"


def cmd_eval(args) -> int:
    out_lines, _ = _read_token_lines(Path(args.output_file))
    ref_lines, _ = _read_token_lines(Path(args.reference_file))
    if len(out_lines) != len(ref_lines):
        print(
            f"error: line count mismatch: {len(out_lines)} output vs "
            f"{len(ref_lines)} reference",
            file=sys.stderr,
        )
        return 1
    per_pair = []
    reports: list[MetricReport] = []
    errors = 0
    for index, (out_line, ref_line) in enumerate(zip(out_lines, ref_lines)):
        try:
            report = evaluate_pair(
                _parse_line_lenient(out_line), _parse_line_lenient(ref_line)
            )
        except ValueError as exc:
            per_pair.append({"index": index, "error": str(exc)})
            errors += 1
            continue
        reports.append(report)
        per_pair.append({"index": index, **report.as_dict()})
    agg = aggregate(reports)
    width = max(len(label) for label, _ in _METRIC_LABELS.values())
    print(f"pairs evaluated: {agg.n_pairs}  errors: {errors}")
    for name in METRIC_NAMES:
        label = _METRIC_LABELS[name][0]
        value = _format_metric(name, getattr(agg.report, name))
        undefined = agg.undefined_counts[name]
        suffix = f"  (undefined: {undefined})" if undefined else ""
        print(f"{label:<{width}}  {value}{suffix}")
    if args.json:
        payload = {
            "n_pairs": agg.n_pairs,
            "errors": errors,
            "per_pair": per_pair,
            "aggregate": agg.report.as_dict(),
            "undefined_counts": agg.undefined_counts,
        }
        Path(args.json).write_text(
            json.dumps(payload, indent=2, sort_keys=True) + "\n",
            encoding="utf-8",
        )
    return 1 if errors else 0


# --- validate ----------------------------------------------------------------

def cmd_validate(args) -> int:
    lines, _ = _read_token_lines(Path(args.input))
    total = 0
    for index, line in enumerate(lines):
        try:
            tokens = _parse_line_lenient(line)
        except ValueError as exc:
            print(f"line {index + 1}: {exc}")
            total += 1
            continue
        for violation in validate_stream(tokens):
            print(
                f"line {index + 1}: token {violation.index}: {violation.rule}"
            )
            total += 1
    print(f"{total} violation(s) in {len(lines)} line(s)", file=sys.stderr)
    return 1 if total else 0


# --- vocab -------------------------------------------------------------------

def cmd_vocab(args) -> int:
    out_path = Path(args.out)
    entries = build_vocab()
    out_path.write_text(
        "".join(f"{text}\t{index}\n" for text, index in entries),
        encoding="utf-8",
    )
    maps_path = out_path.with_name(out_path.stem + "_maps.json")
    maps_path.write_text(
        json.dumps(vocab_maps(), indent=2, sort_keys=True) + "\n",
        encoding="utf-8",
    )
    return 0


# --- parser ------------------------------------------------------------------

def _add_jobs(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--jobs", type=int, default=int(_env("JOBS", "1")), metavar="N",
        help="worker processes (default 1)",
    )


def _add_out(parser: argparse.ArgumentParser, default: str = "-") -> None:
    parser.add_argument(
        "--out", default=_env("OUT", default), metavar="PATH",
        help=f"output path (default {default})",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="remiz",
        description="Multi-track MIDI tokenizer, arrangement dataset "
        "builder, and objective metric suite.",
    )
    parser.add_argument(
        "--version", action="version", version=f"remiz {__version__}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tokenize", help="MIDI files to token lines")
    p.add_argument("inputs", nargs="+")
    p.add_argument(
        "--include-st", action="store_true", default=_env_flag("INCLUDE_ST"),
        help="emit time-signature and tempo tokens",
    )
    _add_jobs(p)
    _add_out(p)
    p.set_defaults(func=cmd_tokenize)

    p = sub.add_parser("detokenize", help="token lines back to MIDI files")
    p.add_argument("input")
    p.add_argument("--out", default=_env("OUT", "."), metavar="DIR")
    p.set_defaults(func=cmd_detokenize)

    p = sub.add_parser("build", help="build training samples for a task")
    p.add_argument("inputs", nargs="+")
    p.add_argument(
        "--task", required=True, choices=[t.value for t in TaskKind]
    )
    seed_env = _env("SEED", None)
    p.add_argument(
        "--seed", type=int, required=seed_env is None,
        default=None if seed_env is None else int(seed_env),
    )
    p.add_argument(
        "--four-four-only", action="store_true",
        default=_env_flag("FOUR_FOUR_ONLY"),
        help="skip songs containing any non-4/4 bar",
    )
    p.add_argument(
        "--max-len", type=int, default=int(_env("MAX_LEN", MAX_SAMPLE_TOKENS)),
        metavar="N", help="drop samples longer than N tokens",
    )
    p.add_argument(
        "--no-voice", action="store_true", default=_env_flag("NO_VOICE"),
        help="voicesep ablation: order instruments by class id",
    )
    _add_jobs(p)
    _add_out(p)
    p.set_defaults(func=cmd_build)

    p = sub.add_parser("corpus", help="export a pre-training corpus")
    p.add_argument("inputs", nargs="+")
    p.add_argument(
        "--four-four-only", action="store_true",
        default=_env_flag("FOUR_FOUR_ONLY"),
    )
    _add_jobs(p)
    _add_out(p)
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("eval", help="objective metrics: output vs reference")
    p.add_argument("output_file")
    p.add_argument("reference_file")
    p.add_argument("--json", metavar="PATH", help="also write a JSON report")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("validate", help="report grammar violations")
    p.add_argument("input")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("vocab", help="write the vocabulary file and maps")
    _add_out(p, default="vocab.tsv")
    p.set_defaults(func=cmd_vocab)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
