/** Public binding surface, re-exported in one place. */

export {
  boundBuildSample,
  boundDetokenize,
  boundEvaluate,
  boundTokenize,
  loadVocab,
  primaryVersion,
} from "./bindings";
export type { BuildOptions } from "./bindings";
export { RemizError } from "./run";
export type {
  BoundSample,
  MetricReport,
  TaskName,
  Vocab,
} from "./types";
