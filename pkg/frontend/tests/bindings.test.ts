/** Boundary tests: every result must match a direct tool invocation.

The suite drives the bindings and the remiz executable side by side on a
20-file fixture set and on hand-written segments, comparing outputs byte
for byte. Nothing here re-derives tool behavior; the tool's own output is
the expected value.
*/

import { execFileSync } from "node:child_process";
import { mkdtempSync, readFileSync, readdirSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, resolve } from "node:path";
import { describe, expect, it } from "vitest";

import {
  RemizError,
  boundBuildSample,
  boundDetokenize,
  boundEvaluate,
  boundTokenize,
  loadVocab,
  primaryVersion,
} from "../src";
import type { TaskName } from "../src";

const bin = process.env.REMIZ_BIN ?? "remiz";
const fixtureDir = resolve("tests", "fixtures");
const fixtures = readdirSync(fixtureDir)
  .filter((name) => name.endsWith(".mid"))
  .sort();

function scratch<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "remiz-test-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}

function cliTokenize(midiPath: string, includeSt: boolean): string {
  return scratch((dir) => {
    const out = join(dir, "tokens.txt");
    const args = ["tokenize"];
    if (includeSt) {
      args.push("--include-st");
    }
    args.push("--out", out, midiPath);
    execFileSync(bin, args);
    const lines = readFileSync(out, "utf8")
      .split("\n")
      .filter((line) => line !== "" && !line.startsWith("# "));
    expect(lines).toHaveLength(1);
    return lines[0]!;
  });
}

function cliBuildRecords(
  line: string,
  task: TaskName,
  seed: number
): Array<Record<string, unknown>> {
  return scratch((dir) => {
    const input = join(dir, "song.tokens");
    const output = join(dir, "samples.jsonl");
    writeFileSync(input, `# {"sources": ["sample"]}\n${line}\n`);
    execFileSync(
      bin,
      ["build", "--task", task, "--seed", String(seed), "--out", output, input],
      { stdio: ["ignore", "pipe", "pipe"] }
    );
    return readFileSync(output, "utf8")
      .split("\n")
      .filter((text) => text.trim() !== "")
      .map((text) => JSON.parse(text) as Record<string, unknown>)
      .filter((parsed) => !("_meta" in parsed));
  });
}

// Hand-written one-window segments. Band, piano, and voicesep windows span
// one bar; drum windows span four.
const BAND_SEGMENT =
  "i-0 o-0 p-72 d-11 o-24 p-76 d-11 i-11 o-0 p-40 d-23 b-1";
const BAND_PREV = "i-0 o-0 p-71 d-11 i-11 o-0 p-43 d-23 b-1";
const PIANO_ACCEPT = "i-0 o-0 p-36 d-11 o-12 p-84 d-11 i-11 o-0 p-40 d-23 b-1";
const PIANO_REJECT =
  "i-0 o-0 p-60 d-11 o-12 p-62 d-11 i-11 o-0 p-30 d-11 o-24 p-90 d-11 b-1";
const DRUM_BARS = [
  "i-34 o-0 p-164 d-0 i-0 o-0 p-60 d-11 b-1",
  "i-34 o-12 p-170 d-0 i-0 o-12 p-64 d-11 b-1",
  "i-34 o-24 p-164 d-0 i-0 o-24 p-67 d-11 b-1",
  "i-34 o-36 p-180 d-0 i-0 o-36 p-72 d-11 b-1",
];
const DRUM_SEGMENT = DRUM_BARS.join(" ");
const DRUM_PREV = [
  "i-34 o-0 p-170 d-0 i-0 o-0 p-55 d-11 b-1",
  "i-34 o-12 p-164 d-0 i-0 o-12 p-57 d-11 b-1",
  "i-34 o-24 p-170 d-0 i-0 o-24 p-59 d-11 b-1",
  "i-34 o-36 p-176 d-0 i-0 o-36 p-60 d-11 b-1",
].join(" ");
const VOICESEP_SEGMENT = "i-34 o-0 p-164 d-0 i-0 o-0 p-60 d-11 b-1";

describe("version", () => {
  it("moves in lockstep with this package", () => {
    const manifest = JSON.parse(
      readFileSync(resolve("package.json"), "utf8")
    ) as { version: string };
    expect(primaryVersion()).toBe(manifest.version);
  });
});

describe("vocabulary", () => {
  it("loads all 950 entries with dense ids", () => {
    const vocab = loadVocab();
    expect(vocab.idToToken).toHaveLength(950);
    expect(vocab.tokenToId.size).toBe(950);
    vocab.idToToken.forEach((text, id) => {
      expect(vocab.tokenToId.get(text)).toBe(id);
    });
  });

  it("places the specials, bar token, and kind blocks", () => {
    const vocab = loadVocab();
    expect(vocab.tokenToId.get("<SEP>")).toBe(0);
    expect(vocab.tokenToId.get("<EOS>")).toBe(4);
    expect(vocab.tokenToId.get("b-1")).toBe(5);
    expect(vocab.tokenToId.get("i-0")).toBe(6);
    expect(vocab.idToToken[949]).toBe("t-48");
  });

  it("carries the time-signature and tempo maps", () => {
    const vocab = loadVocab();
    expect(vocab.timeSignatures["s-17"]).toEqual([4, 4]);
    expect(vocab.temposBpm["t-35"]).toBeCloseTo(120.8159, 3);
  });
});

describe("tokenize equivalence", () => {
  for (const name of fixtures) {
    it(`matches the tool byte for byte on ${name}`, () => {
      const path = join(fixtureDir, name);
      const bytes = readFileSync(path);
      expect(boundTokenize(bytes).join(" ")).toBe(cliTokenize(path, false));
      expect(boundTokenize(bytes, { includeSt: true }).join(" ")).toBe(
        cliTokenize(path, true)
      );
    });
  }

  it("covers the full 20-file fixture set", () => {
    expect(fixtures).toHaveLength(20);
  });

  it("raises the tool's error text for corrupt input", () => {
    const bad = new TextEncoder().encode("not midi");
    expect(() => boundTokenize(bad)).toThrow(RemizError);
    expect(() => boundTokenize(bad)).toThrow(/missing MThd header/);
  });
});

describe("detokenize", () => {
  it("round-trips fixture tokens through a rebuilt file", () => {
    const bytes = readFileSync(join(fixtureDir, fixtures[0]!));
    const tokens = boundTokenize(bytes, { includeSt: true });
    const rebuilt = boundDetokenize(tokens);
    expect(boundTokenize(rebuilt, { includeSt: true })).toEqual(tokens);
  });

  it("raises the tool's error text for an out-of-range token", () => {
    expect(() => boundDetokenize(["i-0", "o-200", "p-60", "d-11", "b-1"]))
      .toThrow(/o-200/);
  });
});

describe("build", () => {
  const goldenCases: Array<[TaskName, string, string | null, number]> = [
    ["band", BAND_SEGMENT, BAND_PREV, 99],
    ["piano", PIANO_ACCEPT, BAND_PREV, 7],
    ["drum", DRUM_SEGMENT, DRUM_PREV, 11],
    ["voicesep", VOICESEP_SEGMENT, null, 5],
  ];

  for (const [task, segment, prev, seed] of goldenCases) {
    it(`matches the tool's ${task} record byte for byte`, () => {
      const sample = boundBuildSample(
        task,
        segment.split(" "),
        prev === null ? null : prev.split(" "),
        seed
      );
      const line = prev === null ? segment : `${prev} ${segment}`;
      const wantIndex = prev === null ? 0 : 1;
      const record = cliBuildRecords(line, task, seed).find(
        (parsed) => parsed["segment_index"] === wantIndex
      );
      expect(record).toBeDefined();
      expect(sample.tokens.join(" ")).toBe(
        (record!["tokens"] as string[]).join(" ")
      );
      expect(sample.lossStartIndex).toBe(record!["loss_start_index"]);
      expect(sample.metadata["task"]).toBe(task);
      expect(sample.metadata["source_id"]).toBe("sample");
      expect(sample.metadata["segment_index"]).toBe(wantIndex);
    });
  }

  it("is deterministic for a fixed seed", () => {
    const first = boundBuildSample(
      "band",
      BAND_SEGMENT.split(" "),
      BAND_PREV.split(" "),
      1234
    );
    const second = boundBuildSample(
      "band",
      BAND_SEGMENT.split(" "),
      BAND_PREV.split(" "),
      1234
    );
    expect(second).toEqual(first);
  });

  it("threads the previous window into the history section", () => {
    const sample = boundBuildSample(
      "band",
      BAND_SEGMENT.split(" "),
      BAND_PREV.split(" "),
      99
    );
    const start = sample.tokens.indexOf("<HISTORY>") + 1;
    const end = sample.tokens.indexOf("<SEP>");
    expect(sample.tokens.slice(start, end).join(" ")).toBe(BAND_PREV);
  });

  it("records the caller's source name", () => {
    const sample = boundBuildSample(
      "voicesep",
      VOICESEP_SEGMENT.split(" "),
      null,
      5,
      { sourceId: "songA" }
    );
    expect(sample.metadata["source_id"]).toBe("songA");
  });

  it("passes the no-voice flag through", () => {
    const voiced = boundBuildSample(
      "voicesep",
      VOICESEP_SEGMENT.split(" "),
      null,
      5
    );
    const flat = boundBuildSample(
      "voicesep",
      VOICESEP_SEGMENT.split(" "),
      null,
      5,
      { noVoice: true }
    );
    expect(voiced.tokens[1]).toBe("i-34");
    expect(flat.tokens[1]).toBe("i-0");
  });

  it("passes the max-len limit through", () => {
    expect(() =>
      boundBuildSample("band", BAND_SEGMENT.split(" "), null, 3, { maxLen: 10 })
    ).toThrow(/overlength/);
  });

  it("raises the tool's stats for a rejected piano window", () => {
    expect(() =>
      boundBuildSample("piano", PIANO_REJECT.split(" "), null, 7)
    ).toThrow(/reject-pitch-range/);
  });

  it("raises the tool's error text for an invalid segment", () => {
    expect(() =>
      boundBuildSample("band", ["i-0", "p-60"], null, 1)
    ).toThrow(RemizError);
  });
});

describe("evaluate", () => {
  for (const name of fixtures) {
    it(`reports identity metrics for ${name} against itself`, () => {
      const tokens = boundTokenize(readFileSync(join(fixtureDir, name)));
      expect(boundEvaluate(tokens, tokens)).toEqual({
        i_iou: 1,
        v_wer: 0,
        p_iou_segment: 1,
        o_iou_segment: 1,
        melody_recall: 1,
        p_iou_track: 1,
        o_iou_track: 1,
        d_d: 0,
      });
    });
  }

  it("scores a re-voiced note as the tool does", () => {
    const out = "i-0 o-0 p-60 d-11 b-1".split(" ");
    const ref = "i-11 o-0 p-60 d-11 b-1".split(" ");
    expect(boundEvaluate(out, ref)).toEqual({
      i_iou: 0,
      v_wer: 1,
      p_iou_segment: 1,
      o_iou_segment: 1,
      melody_recall: 1,
      p_iou_track: null,
      o_iou_track: null,
      d_d: null,
    });
  });

  it("returns null for metrics the tool marks undefined", () => {
    const drums = "i-34 o-0 p-164 d-0 b-1".split(" ");
    const report = boundEvaluate(drums, drums);
    expect(report.melody_recall).toBeNull();
    expect(report.i_iou).toBe(1);
    expect(report.d_d).toBe(0);
  });

  it("raises the tool's error text for an unparseable token", () => {
    const ref = "i-0 o-0 p-60 d-11 b-1".split(" ");
    expect(() => boundEvaluate(["hello"], ref)).toThrow(/unknown token/);
  });
});

describe("errors", () => {
  it("carries the exit code on RemizError", () => {
    try {
      boundTokenize(new TextEncoder().encode("not midi"));
      expect.unreachable("tokenize accepted corrupt bytes");
    } catch (error) {
      expect(error).toBeInstanceOf(RemizError);
      expect((error as RemizError).exitCode).toBe(1);
    }
  });
});
