/** Reference predictors the trained network has to beat. */

import * as tf from "@tensorflow/tfjs";

import { SplitData } from "./data";
import { Geometry } from "./manifest";

/** Index of the center block in the (top, left, center, right, bottom) stack. */
export const CENTER_BLOCK = 2;

export function mseOf(truth: tf.Tensor, pred: tf.Tensor): number {
  return tf.tidy(() => tf.mean(tf.square(tf.sub(truth, pred))).dataSync()[0]);
}

/** MSE of predicting all zeros. */
export function zeroPredictorMse(data: SplitData): number {
  return tf.tidy(() => tf.mean(tf.square(data.ys)).dataSync()[0]);
}

/**
 * Copy the zeroth-order image into every band.
 *
 * The central cube_side square of the center block is the zeroth order.
 * In averaged weight mode it already reads as the band mean; in unit mode
 * it is the band sum, so it is scaled by 1/bands.
 */
export function zerothOrderCopy(data: SplitData, geometry: Geometry): tf.Tensor4D {
  return tf.tidy(() => {
    const n = data.ids.length;
    const side = geometry.cube_side;
    const margin = (geometry.block_side - side) / 2;
    const bands = geometry.shifts.length;
    const zeroth = tf.slice(
      data.xs,
      [0, margin, margin, CENTER_BLOCK],
      [n, side, side, 1],
    );
    const scale = geometry.weight_mode === "unit" ? 1 / bands : 1;
    return tf.tile(zeroth.mul(scale), [1, 1, 1, bands]) as tf.Tensor4D;
  });
}

export function zerothOrderCopyMse(data: SplitData, geometry: Geometry): number {
  return tf.tidy(() => mseOf(data.ys, zerothOrderCopy(data, geometry)));
}
