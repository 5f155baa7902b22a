/** Model save/load through raw artifact files (no native IO handlers). */

import * as fs from "fs";
import * as path from "path";

import * as tf from "@tensorflow/tfjs";

const TOPOLOGY = "model.json";
const WEIGHTS = "weights.bin";

export async function saveModel(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  let captured: tf.io.ModelArtifacts | null = null;
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      captured = artifacts;
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(),
          modelTopologyType: "JSON",
        },
      };
    }),
  );
  const artifacts = captured as unknown as tf.io.ModelArtifacts;
  fs.writeFileSync(
    path.join(dir, TOPOLOGY),
    JSON.stringify({
      modelTopology: artifacts.modelTopology,
      weightSpecs: artifacts.weightSpecs,
      format: artifacts.format,
      generatedBy: artifacts.generatedBy,
    }),
  );
  fs.writeFileSync(path.join(dir, WEIGHTS), Buffer.from(artifacts.weightData as ArrayBuffer));
}

export async function loadModel(dir: string): Promise<tf.LayersModel> {
  const meta = JSON.parse(fs.readFileSync(path.join(dir, TOPOLOGY), "utf-8"));
  const weights = fs.readFileSync(path.join(dir, WEIGHTS));
  const weightData = weights.buffer.slice(
    weights.byteOffset,
    weights.byteOffset + weights.byteLength,
  );
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: meta.modelTopology,
      weightSpecs: meta.weightSpecs,
      weightData,
    }),
  );
}
