/**
 * Multi-branch convolutional reconstructor.
 *
 * The network maps the five-block detector stack (block, block, 5) to a
 * cube (side, side, bands). Several branches of different depth process
 * the input independently, like an ensemble of weak learners: each branch
 * shrinks the image from block side to cube side with unpadded
 * convolutions whose kernel sizes sum to exactly the required reduction,
 * then emits a candidate cube through a padded linear head. The candidate
 * cubes are concatenated and merged by a per-voxel-stack linear
 * combination with bias (a 1x1 convolution).
 */

import * as tf from "@tensorflow/tfjs";

export interface BranchPlan {
  /** Kernel sizes of the unpadded interior layers. */
  kernels: number[];
  /** Filter counts of the interior layers (same length as kernels). */
  filters: number[];
}

export interface NetConfig {
  /** Side of the square block inputs. */
  inputSide: number;
  /** Channel count of the input stack (five diffraction-order blocks). */
  inputChannels: number;
  /** Side of the square output cube. */
  outputSide: number;
  /** Spectral band count of the output cube. */
  bands: number;
  branches: number;
  /** Interior layer widths used by the default branch plans. */
  widths: [number, number];
  /** Explicit per-branch plans; overrides the defaults when given. */
  branchPlans?: BranchPlan[];
  /** Kernel size of the padded per-branch head. */
  headKernel: number;
  learningRate: number;
  batchSize: number;
  maxEpochs: number;
  patience: number;
  seed: number;
}

export const DESK_DEFAULTS = {
  branches: 5,
  widths: [32, 16] as [number, number],
  headKernel: 3,
  learningRate: 1e-4,
  batchSize: 32,
  maxEpochs: 40,
  patience: 5,
  seed: 1,
  inputChannels: 5,
};

export function makeConfig(partial: Partial<NetConfig> &
    Pick<NetConfig, "inputSide" | "outputSide" | "bands">): NetConfig {
  const cfg: NetConfig = { ...DESK_DEFAULTS, ...partial };
  validateConfig(cfg);
  return cfg;
}

function validateConfig(cfg: NetConfig): void {
  if (cfg.branches < 1) throw new Error(`need at least one branch, got ${cfg.branches}`);
  if (cfg.outputSide > cfg.inputSide) {
    throw new Error(
      `output side ${cfg.outputSide} exceeds input side ${cfg.inputSide}`,
    );
  }
  for (const plan of resolvePlans(cfg)) {
    const reduction = plan.kernels.reduce((acc, k) => acc + (k - 1), 0);
    if (reduction !== cfg.inputSide - cfg.outputSide) {
      throw new Error(
        `branch plan ${JSON.stringify(plan.kernels)} reduces by ${reduction}, ` +
        `need ${cfg.inputSide - cfg.outputSide}`,
      );
    }
    if (plan.filters.length !== plan.kernels.length) {
      throw new Error("branch plan filters and kernels must align");
    }
  }
}

/** Split a reduction into `layers` unpadded kernels, largest first. */
function splitReduction(reduction: number, layers: number): number[] {
  const parts: number[] = [];
  let remaining = reduction;
  for (let i = layers; i >= 1; i--) {
    const part = Math.ceil(remaining / i);
    parts.push(part + 1);
    remaining -= part;
  }
  return parts;
}

/**
 * Default branch plans: depths cycle 1, 2, 3 interior layers so the
 * ensemble members differ in complexity; widths taper from widths[0]
 * to widths[1].
 */
export function defaultBranchPlans(cfg: NetConfig): BranchPlan[] {
  const reduction = cfg.inputSide - cfg.outputSide;
  const plans: BranchPlan[] = [];
  for (let i = 0; i < cfg.branches; i++) {
    if (reduction === 0) {
      plans.push({ kernels: [], filters: [] });
      continue;
    }
    const depth = Math.min((i % 3) + 1, reduction);
    const kernels = splitReduction(reduction, depth);
    const filters = kernels.map((_, j) => (j === 0 ? cfg.widths[0] : cfg.widths[1]));
    plans.push({ kernels, filters });
  }
  return plans;
}

export function resolvePlans(cfg: NetConfig): BranchPlan[] {
  if (cfg.branchPlans) {
    if (cfg.branchPlans.length !== cfg.branches) {
      throw new Error(
        `got ${cfg.branchPlans.length} branch plans for ${cfg.branches} branches`,
      );
    }
    return cfg.branchPlans;
  }
  return defaultBranchPlans(cfg);
}

export function buildModel(cfg: NetConfig): tf.LayersModel {
  validateConfig(cfg);
  const plans = resolvePlans(cfg);
  const input = tf.input({
    shape: [cfg.inputSide, cfg.inputSide, cfg.inputChannels],
    name: "block_stack",
  });
  let seed = cfg.seed;
  const nextSeed = () => seed++;

  const candidates = plans.map((plan, i) => {
    let t: tf.SymbolicTensor = input;
    plan.kernels.forEach((kernel, j) => {
      t = tf.layers.conv2d({
        name: `branch${i}_conv${j}`,
        filters: plan.filters[j],
        kernelSize: kernel,
        padding: "valid",
        activation: "relu",
        kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
      }).apply(t) as tf.SymbolicTensor;
    });
    // padded linear head: this branch's candidate cube
    return tf.layers.conv2d({
      name: `branch${i}_cube`,
      filters: cfg.bands,
      kernelSize: cfg.headKernel,
      padding: "same",
      kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
    }).apply(t) as tf.SymbolicTensor;
  });

  const stacked = candidates.length > 1
    ? tf.layers.concatenate({ name: "candidate_stack" })
        .apply(candidates) as tf.SymbolicTensor
    : candidates[0];
  // learned linear combination of the candidate cubes, with bias
  const output = tf.layers.conv2d({
    name: "combine",
    filters: cfg.bands,
    kernelSize: 1,
    padding: "same",
    useBias: true,
    kernelInitializer: tf.initializers.glorotUniform({ seed: nextSeed() }),
  }).apply(stacked) as tf.SymbolicTensor;

  const model = tf.model({ inputs: input, outputs: output });
  model.compile({
    optimizer: tf.train.adam(cfg.learningRate),
    loss: "meanSquaredError",
    metrics: ["mae"],
  });
  return model;
}

/** Closed-form trainable parameter count for a config. */
export function countParamsAnalytic(cfg: NetConfig): number {
  const plans = resolvePlans(cfg);
  let total = 0;
  for (const plan of plans) {
    let channels = cfg.inputChannels;
    plan.kernels.forEach((kernel, j) => {
      total += kernel * kernel * channels * plan.filters[j] + plan.filters[j];
      channels = plan.filters[j];
    });
    total += cfg.headKernel * cfg.headKernel * channels * cfg.bands + cfg.bands;
  }
  total += 1 * 1 * (cfg.branches * cfg.bands) * cfg.bands + cfg.bands;
  return total;
}
