/** Types mirroring the remiz tool's file formats.

Field names inside records and reports are kept exactly as the tool emits
them so that values can round-trip through JSON without translation.
*/

/** The four arrangement tasks accepted by the build command. */
export type TaskName = "band" | "piano" | "drum" | "voicesep";

/** One training sample, parsed from the tool's JSONL output unchanged. */
export interface BoundSample {
  /** Token strings, byte-identical to the tool's output. */
  tokens: string[];
  /** Index of the first token that contributes to the training loss. */
  lossStartIndex: number;
  /** Remaining record fields: task, source_id, segment_index. */
  metadata: Record<string, string | number>;
}

/** The eight objective metrics for one output/reference pair.

A null value means the metric is undefined for the pair, for example
melody recall against a reference with no pitched notes.
*/
export interface MetricReport {
  i_iou: number | null;
  v_wer: number | null;
  p_iou_segment: number | null;
  o_iou_segment: number | null;
  melody_recall: number | null;
  p_iou_track: number | null;
  o_iou_track: number | null;
  d_d: number | null;
}

/** The token vocabulary plus the persisted value maps. */
export interface Vocab {
  /** Token text by dense id; the array index is the id. */
  idToToken: string[];
  /** Inverse of idToToken. */
  tokenToId: Map<string, number>;
  /** s token text to [numerator, denominator]. */
  timeSignatures: Record<string, [number, number]>;
  /** t token text to beats per minute at the bin center. */
  temposBpm: Record<string, number>;
}
