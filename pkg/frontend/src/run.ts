/** Child-process plumbing for the remiz executable.

All behavior lives in the tool itself; this module only launches it,
captures its streams, and raises its error text unchanged. The executable
is `remiz` on PATH unless REMIZ_BIN points elsewhere.
*/

import { spawnSync } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

/** Raised when the tool exits nonzero or rejects the given input.

The message carries the tool's own error text, taken from its stderr or
from the error field of its JSON report.
*/
export class RemizError extends Error {
  readonly exitCode: number;

  constructor(message: string, exitCode: number) {
    super(message);
    this.name = "RemizError";
    this.exitCode = exitCode;
  }
}

export interface RunResult {
  stdout: string;
  stderr: string;
  status: number;
}

const binary = (): string => process.env.REMIZ_BIN ?? "remiz";

/** Run the tool with the given arguments and capture both streams. */
export function runPrimary(args: string[]): RunResult {
  const result = spawnSync(binary(), args, {
    encoding: "utf8",
    maxBuffer: 256 * 1024 * 1024,
  });
  if (result.error !== undefined) {
    throw new RemizError(
      `cannot launch ${binary()}: ${result.error.message}`,
      -1
    );
  }
  return {
    stdout: result.stdout,
    stderr: result.stderr,
    status: result.status ?? -1,
  };
}

/** Return the result, raising the tool's stderr text on nonzero exit. */
export function expectSuccess(result: RunResult): RunResult {
  if (result.status !== 0) {
    throw new RemizError(
      result.stderr.trim() || `exit code ${result.status}`,
      result.status
    );
  }
  return result;
}

/** Run fn with a private scratch directory, removed afterwards. */
export function withScratchDir<T>(fn: (dir: string) => T): T {
  const dir = mkdtempSync(join(tmpdir(), "remiz-"));
  try {
    return fn(dir);
  } finally {
    rmSync(dir, { recursive: true, force: true });
  }
}
