/** Tensor conversion between interchange frames and NHWC training batches. */

import * as tf from "@tensorflow/tfjs";

import { Frame, SampleRecord, readRecordsFile } from "./hsc1";
import { Manifest, splitRecordsPath } from "./manifest";

export interface SplitData {
  ids: number[];
  /** [n, rows, cols, channels] */
  xs: tf.Tensor4D;
  /** [n, side, side, bands] */
  ys: tf.Tensor4D;
}

/** Stack plane-major frames into one NHWC tensor. */
export function framesToNhwc(frames: Frame[]): tf.Tensor4D {
  const n = frames.length;
  const { rows, cols, bands } = frames[0];
  const out = new Float32Array(n * rows * cols * bands);
  for (let i = 0; i < n; i++) {
    const d = frames[i].data;
    if (frames[i].rows !== rows || frames[i].cols !== cols || frames[i].bands !== bands) {
      throw new Error(`frame ${i} has inconsistent dims`);
    }
    for (let b = 0; b < bands; b++) {
      const plane = b * rows * cols;
      for (let r = 0; r < rows; r++) {
        const rowBase = plane + r * cols;
        for (let c = 0; c < cols; c++) {
          out[((i * rows + r) * cols + c) * bands + b] = d[rowBase + c];
        }
      }
    }
  }
  return tf.tensor4d(out, [n, rows, cols, bands]);
}

/** Split one NHWC tensor back into plane-major frames, clamped to >= 0. */
export function nhwcToFrames(t: tf.Tensor4D, clampNonnegative = true): Frame[] {
  const [n, rows, cols, bands] = t.shape;
  const flat = t.dataSync() as Float32Array;
  const frames: Frame[] = [];
  for (let i = 0; i < n; i++) {
    const data = new Float32Array(rows * cols * bands);
    for (let b = 0; b < bands; b++) {
      for (let r = 0; r < rows; r++) {
        for (let c = 0; c < cols; c++) {
          let v = flat[((i * rows + r) * cols + c) * bands + b];
          if (clampNonnegative && v < 0) v = 0;
          data[(b * rows + r) * cols + c] = v;
        }
      }
    }
    frames.push({ rows, cols, bands, data });
  }
  return frames;
}

export function recordsToSplitData(records: SampleRecord[]): SplitData {
  if (records.length === 0) throw new Error("empty record stream");
  return {
    ids: records.map((r) => r.id),
    xs: framesToNhwc(records.map((r) => r.input)),
    ys: framesToNhwc(records.map((r) => r.target)),
  };
}

export function loadSplit(manifest: Manifest, split: string): SplitData {
  return recordsToSplitData(readRecordsFile(splitRecordsPath(manifest, split)));
}
