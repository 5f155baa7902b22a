/** Training loop with validation-driven early stopping. */

import * as tf from "@tensorflow/tfjs";

import { SplitData } from "./data";
import { NetConfig } from "./model";

export interface EpochLog {
  epoch: number;
  trainLoss: number;
  trainMae: number;
  valLoss: number;
  valMae: number;
  ms: number;
}

export interface TrainLog {
  epochs: EpochLog[];
  bestEpoch: number;
  bestValLoss: number;
  stoppedEarly: boolean;
  restoredBestWeights: boolean;
  params: number;
  totalS: number;
}

/**
 * Keeps the weights of the epoch with the lowest validation loss, stops
 * training after `patience` epochs without improvement, and restores the
 * best weights when training ends.
 */
export class BestWeightsEarlyStopping extends tf.CustomCallback {
  bestValLoss = Infinity;
  bestEpoch = -1;
  stoppedEarly = false;
  restored = false;
  private bestWeights: tf.Tensor[] | null = null;
  private trainedModel: tf.LayersModel;

  constructor(model: tf.LayersModel, private patience: number) {
    super({});
    this.trainedModel = model;
  }

  override async onEpochEnd(epoch: number, logs?: tf.Logs): Promise<void> {
    const valLoss = logs?.val_loss;
    if (valLoss === undefined) return;
    if (valLoss < this.bestValLoss) {
      this.bestValLoss = valLoss;
      this.bestEpoch = epoch;
      if (this.bestWeights) this.bestWeights.forEach((w) => w.dispose());
      this.bestWeights = this.trainedModel.getWeights().map((w) => w.clone());
    } else if (epoch - this.bestEpoch >= this.patience) {
      this.stoppedEarly = true;
      this.trainedModel.stopTraining = true;
    }
  }

  override async onTrainEnd(): Promise<void> {
    if (this.bestWeights) {
      this.trainedModel.setWeights(this.bestWeights);
      this.restored = true;
    }
  }
}

const metric = (logs: tf.Logs | undefined, ...names: string[]): number => {
  for (const name of names) {
    const v = logs?.[name];
    if (v !== undefined) return v;
  }
  return NaN;
};

export async function trainModel(
  model: tf.LayersModel,
  cfg: NetConfig,
  train: SplitData,
  val: SplitData,
  onEpoch?: (log: EpochLog) => void,
): Promise<TrainLog> {
  const epochs: EpochLog[] = [];
  const stopper = new BestWeightsEarlyStopping(model, cfg.patience);
  let epochStart = Date.now();
  const t0 = Date.now();

  const logger = new tf.CustomCallback({
    onEpochBegin: async () => {
      epochStart = Date.now();
    },
    onEpochEnd: async (epoch, logs) => {
      const entry: EpochLog = {
        epoch: epoch + 1,
        trainLoss: metric(logs, "loss"),
        trainMae: metric(logs, "mae", "MAE"),
        valLoss: metric(logs, "val_loss"),
        valMae: metric(logs, "val_mae", "val_MAE"),
        ms: Date.now() - epochStart,
      };
      epochs.push(entry);
      onEpoch?.(entry);
    },
  });

  await model.fit(train.xs, train.ys, {
    epochs: cfg.maxEpochs,
    batchSize: cfg.batchSize,
    validationData: [val.xs, val.ys],
    shuffle: true,
    verbose: 0,
    callbacks: [logger, stopper],
  });

  return {
    epochs,
    bestEpoch: stopper.bestEpoch + 1,
    bestValLoss: stopper.bestValLoss,
    stoppedEarly: stopper.stoppedEarly,
    restoredBestWeights: stopper.restored,
    params: model.countParams(),
    totalS: (Date.now() - t0) / 1000,
  };
}
