/** Command entry: train, predict, and baseline scoring on dataset exports. */

import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { zeroPredictorMse, zerothOrderCopyMse, mseOf } from "./baselines";
import { loadSplit } from "./data";
import { loadManifest } from "./manifest";
import { buildModel, countParamsAnalytic, makeConfig, DESK_DEFAULTS } from "./model";
import { loadModel, saveModel } from "./persist";
import { predictToFile } from "./predict";
import { trainModel } from "./train";

interface Options {
  [key: string]: string;
}

function parseArgs(argv: string[]): { command: string; opts: Options } {
  const [command, ...rest] = argv;
  const opts: Options = {};
  for (let i = 0; i < rest.length; i += 2) {
    const key = rest[i];
    if (!key.startsWith("--") || i + 1 >= rest.length) {
      throw new Error(`cannot parse arguments near ${key}`);
    }
    opts[key.slice(2)] = rest[i + 1];
  }
  return { command: command ?? "", opts };
}

const num = (opts: Options, key: string, fallback: number): number =>
  key in opts ? Number(opts[key]) : fallback;

async function cmdTrain(opts: Options): Promise<void> {
  const dataDir = opts.data;
  if (!dataDir) throw new Error("train needs --data DIR");
  const modelDir = opts["model-out"] ?? path.join(dataDir, "model");
  const manifest = loadManifest(dataDir);
  const geom = manifest.geometry;

  const cfg = makeConfig({
    inputSide: geom.block_side,
    outputSide: geom.cube_side,
    bands: geom.shifts.length,
    branches: num(opts, "branches", DESK_DEFAULTS.branches),
    widths: opts.widths
      ? (opts.widths.split(",").map(Number) as [number, number])
      : DESK_DEFAULTS.widths,
    learningRate: num(opts, "lr", DESK_DEFAULTS.learningRate),
    batchSize: num(opts, "batch", DESK_DEFAULTS.batchSize),
    maxEpochs: num(opts, "epochs", DESK_DEFAULTS.maxEpochs),
    patience: num(opts, "patience", DESK_DEFAULTS.patience),
    seed: num(opts, "seed", DESK_DEFAULTS.seed),
  });
  console.log("config:", JSON.stringify(cfg));

  const train = loadSplit(manifest, "train");
  const val = loadSplit(manifest, "val");
  console.log(`train ${train.ids.length} samples, val ${val.ids.length} samples`);
  console.log(`baselines on val: zero ${zeroPredictorMse(val).toFixed(2)}, ` +
              `zeroth-copy ${zerothOrderCopyMse(val, geom).toFixed(2)}`);

  const model = buildModel(cfg);
  console.log(`model: ${model.countParams()} trainable parameters ` +
              `(analytic ${countParamsAnalytic(cfg)})`);

  const log = await trainModel(model, cfg, train, val, (e) => {
    console.log(
      `epoch ${e.epoch}: loss ${e.trainLoss.toFixed(2)} mae ${e.trainMae.toFixed(2)} ` +
      `val_loss ${e.valLoss.toFixed(2)} val_mae ${e.valMae.toFixed(2)} (${(e.ms / 1000).toFixed(1)} s)`,
    );
  });
  console.log(
    `done in ${log.totalS.toFixed(1)} s: best epoch ${log.bestEpoch} ` +
    `(val_loss ${log.bestValLoss.toFixed(2)}), early stop ${log.stoppedEarly}, ` +
    `best weights restored ${log.restoredBestWeights}`,
  );

  await saveModel(model, modelDir);
  fs.writeFileSync(
    path.join(modelDir, "train_log.json"),
    JSON.stringify({ config: cfg, ...log }, null, 2),
  );
  const restoredVal = mseOf(val.ys, model.predict(val.xs) as tf.Tensor);
  console.log(`saved model to ${modelDir}; val MSE with restored weights ${restoredVal.toFixed(2)}`);
}

async function cmdPredict(opts: Options): Promise<void> {
  const dataDir = opts.data;
  const modelDir = opts.model;
  if (!dataDir || !modelDir) throw new Error("predict needs --data DIR and --model DIR");
  const split = opts.split ?? "val";
  const out = opts.out ?? path.join(dataDir, `${split}_predictions.bin`);
  const manifest = loadManifest(dataDir);
  const data = loadSplit(manifest, split);
  const model = await loadModel(modelDir);
  const stats = await predictToFile(model, data, out);
  console.log(
    `wrote ${stats.count} predictions to ${out} ` +
    `(${stats.meanForwardMs.toFixed(2)} ms per forward pass)`,
  );
}

async function cmdBaselines(opts: Options): Promise<void> {
  const dataDir = opts.data;
  if (!dataDir) throw new Error("baselines needs --data DIR");
  const split = opts.split ?? "val";
  const manifest = loadManifest(dataDir);
  const data = loadSplit(manifest, split);
  console.log(JSON.stringify({
    split,
    count: data.ids.length,
    zero_mse: zeroPredictorMse(data),
    zeroth_copy_mse: zerothOrderCopyMse(data, manifest.geometry),
  }, null, 2));
}

export async function main(argv: string[]): Promise<number> {
  const { command, opts } = parseArgs(argv);
  await tf.setBackend("cpu");
  try {
    switch (command) {
      case "train":
        await cmdTrain(opts);
        return 0;
      case "predict":
        await cmdPredict(opts);
        return 0;
      case "baselines":
        await cmdBaselines(opts);
        return 0;
      default:
        console.error(
          "usage: node dist/cli.js <train|predict|baselines> [--flag value ...]",
        );
        return 2;
    }
  } catch (err) {
    console.error(`error: ${(err as Error).message}`);
    return 1;
  }
}

if (require.main === module) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
