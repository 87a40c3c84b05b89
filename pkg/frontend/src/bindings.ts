/** Bindings onto the remiz command line tool.

Every operation delegates to the tool through its documented file formats;
nothing is re-implemented here, so binding output is byte-identical to a
direct invocation on the same inputs. Inputs are written to a scratch
directory, the tool runs synchronously, and its outputs are parsed without
translation. Errors surface as RemizError carrying the tool's own text.
*/

import { readFileSync, writeFileSync } from "node:fs";
import { join } from "node:path";

import { RemizError, expectSuccess, runPrimary, withScratchDir } from "./run";
import type { BoundSample, MetricReport, TaskName, Vocab } from "./types";

/** Version reported by the tool, for lockstep checks against this package. */
export function primaryVersion(): string {
  const result = expectSuccess(runPrimary(["--version"]));
  return result.stdout.trim().split(" ").pop() ?? "";
}

function tokenLines(text: string): string[] {
  return text
    .split("\n")
    .filter((line) => line.trim() !== "" && !line.startsWith("# "));
}

/** Tokenize one MIDI file given as bytes.

Returns the token strings for the file. Set includeSt to emit the
time-signature and tempo tokens at each bar start.
*/
export function boundTokenize(
  midi: Uint8Array,
  flags?: { includeSt?: boolean }
): string[] {
  return withScratchDir((dir) => {
    const input = join(dir, "input.mid");
    const output = join(dir, "tokens.txt");
    writeFileSync(input, midi);
    const args = ["tokenize"];
    if (flags?.includeSt) {
      args.push("--include-st");
    }
    args.push("--out", output, input);
    expectSuccess(runPrimary(args));
    const lines = tokenLines(readFileSync(output, "utf8"));
    if (lines.length !== 1) {
      throw new RemizError(
        `expected one token line, found ${lines.length}`,
        -1
      );
    }
    return lines[0]!.split(" ");
  });
}

/** Turn one token sequence back into a standard MIDI file. */
export function boundDetokenize(tokens: string[]): Uint8Array {
  return withScratchDir((dir) => {
    const input = join(dir, "tokens.txt");
    writeFileSync(input, `# {"sources": ["out"]}\n${tokens.join(" ")}\n`);
    expectSuccess(runPrimary(["detokenize", input, "--out", dir]));
    return readFileSync(join(dir, "out.mid"));
  });
}

export interface BuildOptions {
  /** Drop the sample when it is longer than this many tokens. */
  maxLen?: number;
  /** Voice separation ablation: order instruments by class id. */
  noVoice?: boolean;
  /** Source name recorded in the sample metadata (default "sample"). */
  sourceId?: string;
}

/** Build one training sample for a task.

segmentTokens must span exactly one task window and prevTokens, when given,
the window before it. Both are written as a single song so the tool derives
the history exactly as it does over a corpus, then the final window's
record is returned unchanged. A RemizError carrying the tool's stats line
is raised when the tool rejects the window.
*/
export function boundBuildSample(
  task: TaskName,
  segmentTokens: string[],
  prevTokens: string[] | null,
  seed: number,
  options?: BuildOptions
): BoundSample {
  return withScratchDir((dir) => {
    const sourceId = options?.sourceId ?? "sample";
    const input = join(dir, "song.tokens");
    const output = join(dir, "samples.jsonl");
    const havePrev = prevTokens !== null && prevTokens.length > 0;
    const line = havePrev
      ? `${prevTokens.join(" ")} ${segmentTokens.join(" ")}`
      : segmentTokens.join(" ");
    writeFileSync(
      input,
      `# ${JSON.stringify({ sources: [sourceId] })}\n${line}\n`
    );
    const args = ["build", "--task", task, "--seed", String(seed)];
    if (options?.maxLen !== undefined) {
      args.push("--max-len", String(options.maxLen));
    }
    if (options?.noVoice) {
      args.push("--no-voice");
    }
    args.push("--out", output, input);
    const run = runPrimary(args);
    if (run.status !== 0) {
      throw new RemizError(
        run.stderr.trim() || `exit code ${run.status}`,
        run.status
      );
    }
    const wantIndex = havePrev ? 1 : 0;
    const record = readFileSync(output, "utf8")
      .split("\n")
      .filter((text) => text.trim() !== "")
      .map((text) => JSON.parse(text) as Record<string, unknown>)
      .find((parsed) => parsed["segment_index"] === wantIndex);
    if (record === undefined) {
      throw new RemizError(
        `no sample for window ${wantIndex}: ${run.stderr.trim()}`,
        1
      );
    }
    const { tokens, loss_start_index, ...metadata } = record as {
      tokens: string[];
      loss_start_index: number;
      [field: string]: unknown;
    };
    return {
      tokens,
      lossStartIndex: loss_start_index,
      metadata: metadata as Record<string, string | number>,
    };
  });
}

/** Evaluate one output sequence against its reference.

Returns the tool's metric report for the pair; metrics the tool marks
undefined come back as null. A RemizError carrying the tool's error text
is raised when the pair cannot be evaluated.
*/
export function boundEvaluate(
  outTokens: string[],
  refTokens: string[]
): MetricReport {
  return withScratchDir((dir) => {
    const outFile = join(dir, "out.txt");
    const refFile = join(dir, "ref.txt");
    const reportFile = join(dir, "report.json");
    writeFileSync(outFile, outTokens.join(" ") + "\n");
    writeFileSync(refFile, refTokens.join(" ") + "\n");
    const run = runPrimary(["eval", outFile, refFile, "--json", reportFile]);
    let payload: { per_pair: Array<Record<string, unknown>> };
    try {
      payload = JSON.parse(readFileSync(reportFile, "utf8"));
    } catch {
      throw new RemizError(
        run.stderr.trim() || `exit code ${run.status}`,
        run.status
      );
    }
    const pair = payload.per_pair[0];
    if (pair === undefined) {
      throw new RemizError("empty report: no pair was evaluated", run.status);
    }
    if (typeof pair["error"] === "string") {
      throw new RemizError(pair["error"], run.status);
    }
    const { index, ...metrics } = pair;
    void index;
    return metrics as unknown as MetricReport;
  });
}

/** Load the token vocabulary and its value maps from the tool. */
export function loadVocab(): Vocab {
  return withScratchDir((dir) => {
    const vocabFile = join(dir, "vocab.tsv");
    expectSuccess(runPrimary(["vocab", "--out", vocabFile]));
    const idToToken: string[] = [];
    const tokenToId = new Map<string, number>();
    for (const line of readFileSync(vocabFile, "utf8").split("\n")) {
      if (line === "") {
        continue;
      }
      const [text, id] = line.split("\t");
      idToToken[Number(id)] = text!;
      tokenToId.set(text!, Number(id));
    }
    const maps = JSON.parse(
      readFileSync(join(dir, "vocab_maps.json"), "utf8")
    ) as {
      time_signatures: Record<string, [number, number]>;
      tempos_bpm: Record<string, number>;
    };
    return {
      idToToken,
      tokenToId,
      timeSignatures: maps.time_signatures,
      temposBpm: maps.tempos_bpm,
    };
  });
}
