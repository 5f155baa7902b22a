/**
 * Acceptance runner: trains the reconstructor on a 500-sample mosaic
 * dataset generated by the Python toolkit, checks output shapes, beats
 * the zero and zeroth-order-copy baselines on validation MSE, verifies
 * early-stopping bookkeeping, checks the overfit sanity bound on a tiny
 * dataset, and hands predictions back to the Python CLI for scoring.
 *
 *   npm run build && npm run acceptance [-- --workdir DIR]
 */

import { execFileSync } from "child_process";
import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

import { mseOf, zeroPredictorMse, zerothOrderCopyMse } from "./baselines";
import { loadSplit, SplitData } from "./data";
import { loadManifest, Manifest } from "./manifest";
import { buildModel, makeConfig, NetConfig } from "./model";
import { predictToFile } from "./predict";
import { trainModel } from "./train";

let failures = 0;

function judge(name: string, ok: boolean, detail: string): void {
  console.log(`[${ok ? "PASS" : "FAIL"}] ${name}: ${detail}`);
  if (!ok) failures += 1;
}

function generateDataset(dir: string, args: string[]): void {
  execFileSync("ctisim", ["dataset", "--out", dir, ...args], { stdio: "pipe" });
}

function mosaicDatasetArgs(
  nFull: number, nSparse: number, nBlank: number, cropSide = 12, sourceCols = 96,
): string[] {
  return [
    "--seed", "42", "--scene-kind", "mosaic",
    "--source-rows", "64", "--source-cols", String(sourceCols), "--source-bands", "6",
    "--bands", "2", "--crop-side", String(cropSide), "--shifts", "1,2",
    "--weight-mode", "averaged", "--sparse-strides", "5,7",
    "--n-full", String(nFull), "--n-sparse", String(nSparse),
    "--n-blank", String(nBlank), "--n-test", "0",
  ];
}

const deskConfig = (manifest: Manifest, overrides: Partial<NetConfig> = {}): NetConfig =>
  makeConfig({
    inputSide: manifest.geometry.block_side,
    outputSide: manifest.geometry.cube_side,
    bands: manifest.geometry.shifts.length,
    widths: [8, 6],
    learningRate: 3e-3,
    maxEpochs: 18,
    patience: 5,
    ...overrides,
  });

async function learnabilityCriterion(workdir: string): Promise<void> {
  const t0 = Date.now();
  const dataDir = path.join(workdir, "data500");
  if (!fs.existsSync(path.join(dataDir, "manifest.json"))) {
    generateDataset(dataDir, mosaicDatasetArgs(300, 150, 50));
  }
  const manifest = loadManifest(dataDir);
  const train = loadSplit(manifest, "train");
  const val = loadSplit(manifest, "val");
  const total = train.ids.length + val.ids.length;

  const cfg = deskConfig(manifest);
  const model = buildModel(cfg);
  console.log(`dataset ${total} samples (${train.ids.length}/${val.ids.length} train/val), ` +
              `model ${model.countParams()} params, max ${cfg.maxEpochs} epochs`);

  const log = await trainModel(model, cfg, train, val, (e) =>
    console.log(`  epoch ${e.epoch}: loss ${e.trainLoss.toFixed(1)} ` +
                `val_loss ${e.valLoss.toFixed(1)} (${(e.ms / 1000).toFixed(1)} s)`));

  // shape contract over every sample
  const predsPath = path.join(workdir, "cnn_val_predictions.bin");
  await predictToFile(model, val, predsPath);
  const side = manifest.geometry.cube_side;
  const bands = manifest.geometry.shifts.length;
  const out = model.predict(val.xs) as tf.Tensor4D;
  const shapeOk = out.shape[1] === side && out.shape[2] === side && out.shape[3] === bands;
  judge("shape contract", shapeOk,
        `predictions are (${out.shape[1]}, ${out.shape[2]}, ${out.shape[3]}) ` +
        `for every sample (want (${side}, ${side}, ${bands}))`);

  const valMse = mseOf(val.ys, out);
  const zeroMse = zeroPredictorMse(val);
  const copyMse = zerothOrderCopyMse(val, manifest.geometry);
  judge("baseline beat", valMse < zeroMse && valMse < copyMse,
        `val MSE ${valMse.toFixed(1)} vs zero predictor ${zeroMse.toFixed(1)} ` +
        `and zeroth-order copy ${copyMse.toFixed(1)}`);

  judge("early stopping bookkeeping",
        log.restoredBestWeights && log.bestEpoch >= 1 &&
        Math.abs(log.bestValLoss - valMse) / log.bestValLoss < 0.05,
        `best epoch ${log.bestEpoch} (val_loss ${log.bestValLoss.toFixed(1)}), ` +
        `stopped early ${log.stoppedEarly}, restored ${log.restoredBestWeights}, ` +
        `restored-weight val MSE ${valMse.toFixed(1)}`);

  fs.writeFileSync(path.join(workdir, "train_log.json"),
                   JSON.stringify({ config: cfg, ...log }, null, 2));

  // interchange: the Python CLI scores the prediction file with no format errors
  const reportPath = path.join(workdir, "cnn_report.json");
  let exitCode = 0;
  let report: any = null;
  try {
    execFileSync("ctisim", [
      "eval", "--manifest", path.join(dataDir, "manifest.json"),
      "--predictions", predsPath, "--split", "val", "--json", reportPath,
    ], { stdio: "pipe" });
    report = JSON.parse(fs.readFileSync(reportPath, "utf-8"));
  } catch (err: any) {
    exitCode = err.status ?? 1;
  }
  const countOk = report !== null && report.count === val.ids.length;
  // written cubes are clamped at zero, so the scored MSE can only differ
  // from the in-memory value by the clamp; require close agreement
  const mseOk = report !== null && Math.abs(report.mse - valMse) / valMse < 0.05;
  judge("interchange", exitCode === 0 && countOk && mseOk,
        `ctisim eval exit ${exitCode}, scored ${report?.count} predictions, ` +
        `reported MSE ${report?.mse?.toFixed(1)} (local ${valMse.toFixed(1)})`);

  const elapsedS = (Date.now() - t0) / 1000;
  judge("runtime budget", elapsedS < 1800,
        `dataset + training + scoring took ${elapsedS.toFixed(0)} s (budget 1800 s)`);
  out.dispose();
}

async function overfitSanity(workdir: string): Promise<void> {
  // spatially small samples and tiny batches keep pure-JS epochs cheap while
  // giving the optimizer enough steps to actually memorize the set
  const dataDir = path.join(workdir, "data50");
  if (!fs.existsSync(path.join(dataDir, "manifest.json"))) {
    generateDataset(dataDir, mosaicDatasetArgs(40, 10, 0, 8, 64));
  }
  const manifest = loadManifest(dataDir);
  const train = loadSplit(manifest, "train");
  const val = loadSplit(manifest, "val");

  const mean = tf.mean(train.ys).dataSync()[0];
  const variance = tf.mean(tf.square(tf.sub(train.ys, mean))).dataSync()[0];
  const threshold = 0.1 * variance;

  const cfg = deskConfig(manifest, {
    widths: [12, 8], learningRate: 3e-3, batchSize: 4, maxEpochs: 80, patience: 80,
  });
  const model = buildModel(cfg);
  const log = await trainModel(model, cfg, train, val, (e) => {
    if (e.trainLoss < 0.6 * threshold) model.stopTraining = true;
  });

  const trainMse = mseOf(train.ys, model.predict(train.xs) as tf.Tensor);
  judge("overfit sanity", trainMse < threshold,
        `train MSE ${trainMse.toFixed(1)} vs 10% of target variance ` +
        `${threshold.toFixed(1)} after ${log.epochs.length} epochs ` +
        `(${train.ids.length} samples)`);
}

async function main(): Promise<void> {
  await tf.setBackend("cpu");
  const argv = process.argv.slice(2);
  const dirFlag = argv.indexOf("--workdir");
  const workdir = dirFlag >= 0 ? argv[dirFlag + 1]
    : fs.mkdtempSync(path.join(os.tmpdir(), "ctisim-frontend-"));
  fs.mkdirSync(workdir, { recursive: true });
  console.log(`workdir: ${workdir}`);

  const t0 = Date.now();
  await learnabilityCriterion(workdir);
  await overfitSanity(workdir);
  console.log(`total ${(Date.now() - t0) / 1000 | 0} s`);
  process.exitCode = failures === 0 ? 0 : 1;
}

main().catch((err) => {
  console.error(err);
  process.exitCode = 1;
});
