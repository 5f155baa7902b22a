/** Batch prediction into the interchange format. */

import * as tf from "@tensorflow/tfjs";

import { nhwcToFrames, SplitData } from "./data";
import { Frame, writePredictionsFile } from "./hsc1";

export interface PredictStats {
  count: number;
  meanForwardMs: number;
}

/**
 * Run the model over one split and write (id, cube) records.
 *
 * Outputs are clamped at zero before writing: cube intensities are
 * nonnegative by contract and the combine layer is linear.
 */
export async function predictToFile(
  model: tf.LayersModel,
  data: SplitData,
  outPath: string,
  batchSize = 64,
): Promise<PredictStats> {
  const expected = model.inputs[0].shape.slice(1);
  const got = data.xs.shape.slice(1);
  if (JSON.stringify(expected) !== JSON.stringify(got)) {
    throw new Error(
      `model expects inputs of shape ${JSON.stringify(expected)}, ` +
      `dataset provides ${JSON.stringify(got)}`,
    );
  }
  const frames: Frame[] = [];
  const n = data.ids.length;
  let forwardMs = 0;
  for (let start = 0; start < n; start += batchSize) {
    const size = Math.min(batchSize, n - start);
    const batch = tf.slice(data.xs, [start, 0, 0, 0], [size, -1, -1, -1]);
    const t0 = Date.now();
    const out = model.predict(batch) as tf.Tensor4D;
    out.dataSync();
    forwardMs += Date.now() - t0;
    frames.push(...nhwcToFrames(out));
    batch.dispose();
    out.dispose();
  }
  writePredictionsFile(
    outPath,
    data.ids.map((id, i) => ({ id, frame: frames[i] })),
  );
  return { count: n, meanForwardMs: forwardMs / n };
}
